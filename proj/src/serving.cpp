#include "smgcn/serving.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

namespace smgcn {

namespace {

void put_double(std::ostream& out, double v) {
  unsigned char bytes[8];
  std::memcpy(bytes, &v, 8);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + 8);
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double get_double(const char* p) {
  unsigned char bytes[8];
  std::memcpy(bytes, p, 8);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + 8);
  double v;
  std::memcpy(&v, bytes, 8);
  return v;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

CategoryEmbeddings export_embeddings(const Checkpoint& ckpt, const ChannelGraphs<double>& graphs) {
  const auto n = ckpt.params.num_categories();
  if (graphs.num_categories() != n)
    throw data_error("graphs have " + std::to_string(graphs.num_categories()) + " categories but checkpoint has " +
                     std::to_string(n));
  CategoryEmbeddings emb;
  emb.h = category_representations(ckpt.params, graphs, ckpt.category_tokens, ckpt.gcn_options);
  emb.bias = ckpt.params.classifier_bias;
  return emb;
}

void write_embeddings(std::ostream& out, const CategoryEmbeddings& emb, bool binary) {
  out << emb.h.rows() << ' ' << emb.h.cols() << '\n';
  if (binary) {
    for (Eigen::Index i = 0; i < emb.h.size(); ++i) put_double(out, emb.h.data()[i]);
    for (Eigen::Index j = 0; j < emb.bias.size(); ++j) put_double(out, emb.bias.data()[j]);
    return;
  }
  for (Eigen::Index i = 0; i < emb.h.rows(); ++i) {
    for (Eigen::Index j = 0; j < emb.h.cols(); ++j) out << (j ? " " : "") << format_real(emb.h(i, j));
    out << '\n';
  }
  for (Eigen::Index j = 0; j < emb.bias.cols(); ++j) out << (j ? " " : "") << format_real(emb.bias(0, j));
  out << '\n';
}

CategoryEmbeddings read_embeddings(std::istream& in, const std::string& source) {
  std::string header;
  if (!std::getline(in, header)) throw data_error(source + ": empty embedding file");
  std::istringstream hs(header);
  long n = 0, d = 0;
  std::string extra;
  if (!(hs >> n >> d) || (hs >> extra) || n <= 0 || d <= 0)
    throw data_error(source + ": bad embedding header '" + header + "'");
  const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  CategoryEmbeddings emb;
  emb.h.resize(n, d);
  emb.bias.resize(1, n);
  const std::size_t binary_size = 8 * static_cast<std::size_t>(n * d + n);
  if (body.size() == binary_size) {
    const char* p = body.data();
    for (Eigen::Index i = 0; i < emb.h.size(); ++i, p += 8) emb.h.data()[i] = get_double(p);
    for (Eigen::Index j = 0; j < n; ++j, p += 8) emb.bias(0, j) = get_double(p);
    return emb;
  }
  std::istringstream ts(body);
  auto next = [&](const char* what) {
    std::string tok;
    if (!(ts >> tok)) throw data_error(source + ": truncated embedding file while reading " + what);
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw data_error(source + ": bad value '" + tok + "'");
    }
  };
  for (Eigen::Index i = 0; i < emb.h.size(); ++i) emb.h.data()[i] = next("H");
  for (Eigen::Index j = 0; j < n; ++j) emb.bias(0, j) = next("bias");
  std::string rest;
  if (ts >> rest) throw data_error(source + ": trailing data in embedding file");
  return emb;
}

void save_embeddings(const std::string& path, const CategoryEmbeddings& emb, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open for writing: " + path);
  write_embeddings(out, emb, binary);
  if (!out) throw data_error("write failed: " + path);
}

CategoryEmbeddings load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open: " + path);
  return read_embeddings(in, path);
}

Server::Server(Checkpoint ckpt, CategoryEmbeddings embeddings, double threshold)
    : ckpt_(std::move(ckpt)), emb_(std::move(embeddings)), threshold_(threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw config_error("threshold must lie in (0, 1)");
  if (emb_.h.rows() != ckpt_.params.num_categories() || emb_.h.cols() != ckpt_.params.dim())
    throw data_error("embedding file shape " + std::to_string(emb_.h.rows()) + "x" + std::to_string(emb_.h.cols()) +
                     " does not match checkpoint " + std::to_string(ckpt_.params.num_categories()) + "x" +
                     std::to_string(ckpt_.params.dim()));
}

RowVectorXd Server::score(std::string_view query) const {
  const TokenSequence tokens = tokenize(query, static_cast<std::size_t>(ckpt_.max_query_len), ckpt_.vocabulary);
  if (tokens.empty()) return RowVectorXd();
  const std::vector<TokenSequence> batch{tokens};
  const MatrixXd q = encode_eval(ckpt_.params.encoder, std::span<const TokenSequence>(batch));
  return scores_from_embeddings(q, emb_.h, emb_.bias).row(0);
}

std::string Server::respond(std::string_view line) const {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.empty()) return {};
  if (!utf8_characters(line)) return "ERR malformed UTF-8";
  const RowVectorXd s = score(line);
  std::vector<std::pair<double, int>> hits;
  for (Eigen::Index j = 0; j < s.size(); ++j)
    if (s(j) >= threshold_) hits.emplace_back(s(j), static_cast<int>(j));
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::string out;
  char buf[64];
  for (std::size_t k = 0; k < hits.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%s%d:%.6f", k ? "\t" : "", hits[k].second, hits[k].first);
    out += buf;
  }
  return out;
}

std::size_t Server::run(std::istream& in, std::ostream& out) const {
  std::string line;
  std::size_t handled = 0;
  while (std::getline(in, line)) {
    out << respond(line) << '\n';
    ++handled;
  }
  out.flush();
  return handled;
}

}  // namespace smgcn
