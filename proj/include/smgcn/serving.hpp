#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "smgcn/checkpoint.hpp"
#include "smgcn/label_graph.hpp"

namespace smgcn {

/// Post-GCN category representations and classifier bias: all that serving
/// needs besides the query encoder.
struct CategoryEmbeddings {
  MatrixXd h;     // |C| x d
  MatrixXd bias;  // 1 x |C|
};

CategoryEmbeddings export_embeddings(const Checkpoint& ckpt, const ChannelGraphs<double>& graphs);

/// Header `|C| d`, then H row-major, then the bias. Text uses one row per
/// line with the bias on the last line; binary stores little-endian doubles
/// after the header line.
void write_embeddings(std::ostream& out, const CategoryEmbeddings& emb, bool binary);
CategoryEmbeddings read_embeddings(std::istream& in, const std::string& source);
void save_embeddings(const std::string& path, const CategoryEmbeddings& emb, bool binary);
CategoryEmbeddings load_embeddings(const std::string& path);

/// Scores queries with the checkpoint's encoder against fixed category
/// embeddings.
class Server {
 public:
  Server(Checkpoint ckpt, CategoryEmbeddings embeddings, double threshold);

  /// Per-category scores for one query; throws data_error on malformed UTF-8.
  RowVectorXd score(std::string_view query) const;

  /// One protocol response line (without newline): `id:score` pairs at or
  /// above the threshold, tab-separated, by descending score then id.
  /// Empty input gives an empty line; malformed input an `ERR` line.
  std::string respond(std::string_view line) const;

  /// Reads queries until EOF. Returns the number of lines handled.
  std::size_t run(std::istream& in, std::ostream& out) const;

  double threshold() const { return threshold_; }

 private:
  Checkpoint ckpt_;
  CategoryEmbeddings emb_;
  double threshold_;
};

}  // namespace smgcn
