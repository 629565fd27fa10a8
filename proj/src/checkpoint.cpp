#include "smgcn/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace smgcn {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  template <typename T>
  T get(const char* what) {
    unsigned char bytes[sizeof(T)];
    if (!in_.read(reinterpret_cast<char*>(bytes), sizeof(T))) fail(std::string("truncated while reading ") + what);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }

  std::string bytes(std::uint64_t n, const char* what) {
    if (n > (1ULL << 32)) fail(std::string("implausible length for ") + what);
    std::string s(n, '\0');
    if (n && !in_.read(s.data(), static_cast<std::streamsize>(n))) fail(std::string("truncated while reading ") + what);
    return s;
  }

  [[noreturn]] void fail(const std::string& what) const { throw data_error(source_ + ": corrupt checkpoint: " + what); }

 private:
  std::istream& in_;
  std::string source_;
};

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_block(std::ostream& out, const MatrixXd& m) {
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) put<double>(out, m.data()[i]);
}

void get_block(Reader& r, MatrixXd& m, const std::string& name) {
  const auto rows = r.get<std::uint64_t>("block rows");
  const auto cols = r.get<std::uint64_t>("block cols");
  if (rows != static_cast<std::uint64_t>(m.rows()) || cols != static_cast<std::uint64_t>(m.cols()))
    r.fail("block " + name + " has shape " + std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
           std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.get<double>("block data");
}

void put_params(std::ostream& out, const ModelParams& p) {
  p.for_each([&](const std::string&, const MatrixXd& m) { put_block(out, m); });
}

void get_params(Reader& r, ModelParams& p) {
  p.for_each([&](const std::string& name, MatrixXd& m) { get_block(r, m, name); });
}

}  // namespace

Checkpoint make_checkpoint(const TrainResult& model, const TrainConfig& config, std::string config_json) {
  Checkpoint ckpt;
  ckpt.config_json = std::move(config_json);
  ckpt.vocabulary = model.vocabulary;
  ckpt.category_tokens = model.category_tokens;
  ckpt.gcn_options = config.gcn_options();
  ckpt.max_query_len = config.max_query_len;
  ckpt.params = model.params;
  ckpt.optimizer = model.optimizer;
  return ckpt;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const auto& p = ckpt.params;
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put_string(out, ckpt.config_json);

  put<std::uint64_t>(out, ckpt.vocabulary.size());
  for (const auto& t : ckpt.vocabulary.tokens()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.size()));
    out.write(t.data(), static_cast<std::streamsize>(t.size()));
  }
  put<std::uint64_t>(out, ckpt.category_tokens.size());
  for (const auto& seq : ckpt.category_tokens) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(seq.size()));
    for (auto id : seq) put<std::int32_t>(out, id);
  }

  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.gcn_options.merge));
  put<std::uint8_t>(out, ckpt.gcn_options.final_activation ? 1 : 0);
  put<double>(out, ckpt.gcn_options.leaky_slope);
  put<double>(out, p.encoder.dropout_rate);
  put<double>(out, p.encoder.leaky_slope);
  put<std::int32_t>(out, ckpt.max_query_len);

  put<std::uint64_t>(out, static_cast<std::uint64_t>(p.encoder.vocab_size()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(p.encoder.embed_dim()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(p.encoder.output_dim()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(p.num_categories()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(p.gcn.num_layers()));
  for (const auto& w : p.gcn.weights) put<std::uint64_t>(out, static_cast<std::uint64_t>(w[0].cols()));

  put_params(out, p);

  const auto& opt = ckpt.optimizer;
  put<std::int64_t>(out, opt.step);
  put<double>(out, opt.options.learning_rate);
  put<double>(out, opt.options.beta1);
  put<double>(out, opt.options.beta2);
  put<double>(out, opt.options.epsilon);
  put_params(out, opt.first_moment);
  put_params(out, opt.second_moment);
}

Checkpoint read_checkpoint(std::istream& in, const std::string& source) {
  Reader r(in, source);
  char magic[sizeof kCheckpointMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw data_error(source + ": not a checkpoint (bad magic string)");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) r.fail("unsupported version " + std::to_string(version));

  Checkpoint ckpt;
  ckpt.config_json = r.bytes(r.get<std::uint64_t>("config length"), "config");

  const auto vocab_n = r.get<std::uint64_t>("vocabulary size");
  std::vector<std::string> tokens;
  for (std::uint64_t i = 0; i < vocab_n; ++i) tokens.push_back(r.bytes(r.get<std::uint32_t>("token length"), "token"));
  ckpt.vocabulary = Vocabulary::from_tokens(tokens);

  const auto cat_n = r.get<std::uint64_t>("category count");
  for (std::uint64_t i = 0; i < cat_n; ++i) {
    TokenSequence seq(r.get<std::uint32_t>("category length"));
    for (auto& id : seq) {
      id = r.get<std::int32_t>("category token");
      if (id < 0 || static_cast<std::uint64_t>(id) >= vocab_n) r.fail("category token out of range");
    }
    ckpt.category_tokens.push_back(std::move(seq));
  }

  const auto merge = r.get<std::uint32_t>("channel merge");
  if (merge > static_cast<std::uint32_t>(ChannelMerge::concat_project)) r.fail("unknown channel merge");
  ckpt.gcn_options.merge = static_cast<ChannelMerge>(merge);
  ckpt.gcn_options.final_activation = r.get<std::uint8_t>("final activation") != 0;
  ckpt.gcn_options.leaky_slope = r.get<double>("gcn slope");
  const double dropout = r.get<double>("dropout");
  const double encoder_slope = r.get<double>("encoder slope");
  ckpt.max_query_len = r.get<std::int32_t>("max query length");
  if (ckpt.max_query_len < 1) r.fail("max query length must be >= 1");

  const auto vocab = r.get<std::uint64_t>("vocab rows");
  const auto embed_dim = r.get<std::uint64_t>("embed dim");
  const auto out_dim = r.get<std::uint64_t>("output dim");
  const auto num_cats = r.get<std::uint64_t>("num categories");
  const auto layers = r.get<std::uint64_t>("num layers");
  if (vocab != vocab_n) r.fail("embedding rows disagree with vocabulary");
  if (num_cats != cat_n) r.fail("classifier width disagrees with category count");
  if (layers < 1 || layers > 64 || embed_dim > (1u << 20) || out_dim > (1u << 20)) r.fail("implausible dimensions");
  std::vector<Eigen::Index> dims{static_cast<Eigen::Index>(out_dim)};
  for (std::uint64_t l = 0; l < layers; ++l) dims.push_back(static_cast<Eigen::Index>(r.get<std::uint64_t>("layer dim")));
  if (dims.back() != static_cast<Eigen::Index>(out_dim)) r.fail("final GCN width differs from encoder width");

  ModelParams& p = ckpt.params;
  p.encoder = EncoderParams<double>::zeros(static_cast<Eigen::Index>(vocab), static_cast<Eigen::Index>(embed_dim),
                                           static_cast<Eigen::Index>(out_dim));
  p.encoder.dropout_rate = dropout;
  p.encoder.leaky_slope = encoder_slope;
  p.gcn = GcnParams<double>::zeros(dims, ckpt.gcn_options.merge);
  p.classifier_bias = MatrixXd::Zero(1, static_cast<Eigen::Index>(num_cats));
  get_params(r, p);

  auto& opt = ckpt.optimizer;
  opt.step = r.get<std::int64_t>("optimizer step");
  opt.options.learning_rate = r.get<double>("learning rate");
  opt.options.beta1 = r.get<double>("beta1");
  opt.options.beta2 = r.get<double>("beta2");
  opt.options.epsilon = r.get<double>("epsilon");
  opt.first_moment = p.zeros_like();
  opt.second_moment = p.zeros_like();
  get_params(r, opt.first_moment);
  get_params(r, opt.second_moment);
  if (in.peek() != std::char_traits<char>::eof()) r.fail("trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + tmp);
    write_checkpoint(out, ckpt);
    out.flush();
    if (!out) throw data_error("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw data_error("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open: " + path);
  return read_checkpoint(in, path);
}

}  // namespace smgcn
