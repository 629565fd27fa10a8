#include <cstdio>
#include <fstream>
#include <sstream>

#include "smgcn/label_graph.hpp"

namespace smgcn {

namespace {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_graphs(std::ostream& out, const ChannelGraphs<double>& graphs) {
  for (int c = 0; c < kNumChannels; ++c) {
    const auto& ch = graphs.channels[static_cast<std::size_t>(c)];
    if (!ch) continue;
    const auto trips = ch->triplets();
    out << ch->size() << ' ' << c << ' ' << trips.size() << '\n';
    for (const auto& t : trips) out << t.row() << ' ' << t.col() << ' ' << format_real(t.value()) << '\n';
  }
}

ChannelGraphs<double> read_graphs(std::istream& in, const std::string& source) {
  ChannelGraphs<double> graphs;
  std::string line;
  long n_expected = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream header(line);
    long n = 0, channel = 0, nnz = 0;
    if (!(header >> n >> channel >> nnz) || n <= 0 || nnz < 0 || channel < 0 || channel >= kNumChannels)
      throw data_error(source + ": bad channel header '" + line + "'");
    if (n_expected >= 0 && n != n_expected) throw data_error(source + ": channels disagree on |C|");
    if (graphs.channels[static_cast<std::size_t>(channel)])
      throw data_error(source + ": duplicate channel " + std::to_string(channel));
    n_expected = n;
    Matrix<double> dense = Matrix<double>::Zero(n, n);
    for (long k = 0; k < nnz; ++k) {
      if (!std::getline(in, line)) throw data_error(source + ": truncated channel " + std::to_string(channel));
      std::istringstream row(line);
      long i = 0, j = 0;
      std::string value;
      if (!(row >> i >> j >> value) || i < 0 || j < 0 || i >= n || j >= n)
        throw data_error(source + ": bad triplet '" + line + "'");
      try {
        dense(i, j) = std::stod(value);
      } catch (const std::exception&) {
        throw data_error(source + ": bad value '" + value + "'");
      }
    }
    graphs.channels[static_cast<std::size_t>(channel)] = Adjacency<double>::from_dense(std::move(dense));
  }
  if (graphs.active_channels() == 0) throw data_error(source + ": no graph channels");
  return graphs;
}

void save_graphs(const std::string& path, const ChannelGraphs<double>& graphs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open for writing: " + path);
  write_graphs(out, graphs);
  if (!out) throw data_error("write failed: " + path);
}

ChannelGraphs<double> load_graphs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open: " + path);
  return read_graphs(in, path);
}

}  // namespace smgcn
