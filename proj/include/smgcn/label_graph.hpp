#pragma once

#include <array>
#include <cmath>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "smgcn/corpus.hpp"
#include "smgcn/types.hpp"

namespace smgcn {

enum class AdjacencyKind { cooccurrence, similarity };

template <typename Scalar>
struct RawAdjacency {
  Matrix<Scalar> values;  // |C| x |C|, nonnegative after thresholding
  AdjacencyKind kind = AdjacencyKind::cooccurrence;
};

/// Normalized |C| x |C| propagation matrix. Stored as the identity, a dense
/// matrix, or a row-major sparse matrix.
template <typename Scalar>
class Adjacency {
 public:
  struct Identity {
    Eigen::Index size;
  };

  Adjacency() : storage_(Identity{0}) {}
  static Adjacency identity(Eigen::Index n) { return Adjacency(Identity{n}); }
  static Adjacency dense(Matrix<Scalar> m) { return Adjacency(std::move(m)); }
  static Adjacency sparse(SparseMatrix<Scalar> m) {
    m.makeCompressed();
    return Adjacency(std::move(m));
  }

  Eigen::Index size() const {
    return std::visit(
        [](const auto& s) -> Eigen::Index {
          if constexpr (std::is_same_v<std::decay_t<decltype(s)>, Identity>)
            return s.size;
          else
            return s.rows();
        },
        storage_);
  }

  bool is_identity() const { return std::holds_alternative<Identity>(storage_); }
  bool is_sparse() const { return std::holds_alternative<SparseMatrix<Scalar>>(storage_); }

  /// A * rhs
  Matrix<Scalar> apply(const Matrix<Scalar>& rhs) const {
    if (rhs.rows() != size()) throw ContractError("adjacency apply: dimension mismatch");
    if (auto* d = std::get_if<Matrix<Scalar>>(&storage_)) return (*d) * rhs;
    if (auto* s = std::get_if<SparseMatrix<Scalar>>(&storage_)) return (*s) * rhs;
    return rhs;
  }

  /// A^T * rhs
  Matrix<Scalar> apply_transpose(const Matrix<Scalar>& rhs) const {
    if (rhs.rows() != size()) throw ContractError("adjacency apply_transpose: dimension mismatch");
    if (auto* d = std::get_if<Matrix<Scalar>>(&storage_)) return d->transpose() * rhs;
    if (auto* s = std::get_if<SparseMatrix<Scalar>>(&storage_)) return s->transpose() * rhs;
    return rhs;
  }

  Matrix<Scalar> to_dense() const {
    if (auto* d = std::get_if<Matrix<Scalar>>(&storage_)) return *d;
    if (auto* s = std::get_if<SparseMatrix<Scalar>>(&storage_)) return Matrix<Scalar>(*s);
    return Matrix<Scalar>::Identity(size(), size());
  }

  /// Nonzero entries in row-major order.
  std::vector<Eigen::Triplet<Scalar>> triplets() const {
    std::vector<Eigen::Triplet<Scalar>> out;
    if (auto* s = std::get_if<SparseMatrix<Scalar>>(&storage_)) {
      for (Eigen::Index i = 0; i < s->outerSize(); ++i)
        for (typename SparseMatrix<Scalar>::InnerIterator it(*s, i); it; ++it)
          if (it.value() != Scalar(0)) out.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
      return out;
    }
    const Matrix<Scalar> d = to_dense();
    for (Eigen::Index i = 0; i < d.rows(); ++i)
      for (Eigen::Index j = 0; j < d.cols(); ++j)
        if (d(i, j) != Scalar(0)) out.emplace_back(static_cast<int>(i), static_cast<int>(j), d(i, j));
    return out;
  }

  /// Picks sparse storage below 10% density.
  static Adjacency from_dense(Matrix<Scalar> m) {
    const auto nnz = (m.array() != Scalar(0)).count();
    if (m.size() > 0 && double(nnz) < 0.1 * double(m.size())) {
      SparseMatrix<Scalar> s = m.sparseView();
      return sparse(std::move(s));
    }
    return dense(std::move(m));
  }

 private:
  explicit Adjacency(Identity id) : storage_(id) {}
  explicit Adjacency(Matrix<Scalar> m) : storage_(std::move(m)) {}
  explicit Adjacency(SparseMatrix<Scalar> m) : storage_(std::move(m)) {}

  std::variant<Identity, Matrix<Scalar>, SparseMatrix<Scalar>> storage_;
};

enum class Channel : int { coo = 0, sim = 1 };
inline constexpr int kNumChannels = 2;

/// Two-channel fused graph tensor. An absent channel is dropped from propagation.
template <typename Scalar>
struct ChannelGraphs {
  std::array<std::optional<Adjacency<Scalar>>, kNumChannels> channels;

  const std::optional<Adjacency<Scalar>>& operator[](Channel c) const { return channels[static_cast<int>(c)]; }
  std::optional<Adjacency<Scalar>>& operator[](Channel c) { return channels[static_cast<int>(c)]; }

  int active_channels() const {
    int n = 0;
    for (const auto& c : channels) n += c.has_value();
    return n;
  }

  Eigen::Index num_categories() const {
    for (const auto& c : channels)
      if (c) return c->size();
    return 0;
  }

  /// Both channels set to the identity: propagation without a graph.
  static ChannelGraphs identity(Eigen::Index n) {
    ChannelGraphs g;
    for (auto& c : g.channels) c = Adjacency<Scalar>::identity(n);
    return g;
  }
};

/// Row i holds N(c_i, c_j) / N(c_i); zero rows for categories never seen.
template <typename Scalar>
RawAdjacency<Scalar> build_cooccurrence(std::span<const ClickSample> samples, Eigen::Index num_categories) {
  Matrix<Scalar> pair_counts = Matrix<Scalar>::Zero(num_categories, num_categories);
  std::vector<Scalar> counts(static_cast<std::size_t>(num_categories), Scalar(0));
  for (const auto& s : samples) {
    for (auto a : s.clicked_labels) {
      require(a >= 0 && a < num_categories, "build_cooccurrence: label id out of range");
      counts[static_cast<std::size_t>(a)] += Scalar(1);
      for (auto b : s.clicked_labels)
        if (a != b) pair_counts(a, b) += Scalar(1);
    }
  }
  for (Eigen::Index i = 0; i < num_categories; ++i)
    if (counts[static_cast<std::size_t>(i)] > Scalar(0)) pair_counts.row(i) /= counts[static_cast<std::size_t>(i)];
  return {std::move(pair_counts), AdjacencyKind::cooccurrence};
}

enum class EdgeWeight { cosine, binary };

/// Thresholded cosine similarity between category embeddings, zero diagonal.
template <typename Scalar>
RawAdjacency<Scalar> build_similarity(const Matrix<Scalar>& category_embeddings, Scalar alpha,
                                      EdgeWeight weight = EdgeWeight::cosine) {
  require(alpha > Scalar(-1) && alpha < Scalar(1), "build_similarity: alpha must lie in (-1, 1)");
  const Eigen::Index n = category_embeddings.rows();
  Matrix<Scalar> unit = category_embeddings;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar norm = unit.row(i).norm();
    if (!(norm > Scalar(0))) throw data_error("build_similarity: zero-norm embedding for category " + std::to_string(i));
    unit.row(i) /= norm;
  }
  Matrix<Scalar> a = unit * unit.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      Scalar v = i == j ? Scalar(0) : Scalar(0.5) * (a(i, j) + a(j, i));
      if (v < alpha) v = Scalar(0);
      else if (weight == EdgeWeight::binary) v = Scalar(1);
      a(i, j) = v;
      a(j, i) = v;
    }
  }
  return {std::move(a), AdjacencyKind::similarity};
}

/// D^-1/2 (A + I) D^-1/2 with D the row sums of A + I. A zero degree yields
/// a zero entry.
template <typename Scalar>
Adjacency<Scalar> normalize(const RawAdjacency<Scalar>& raw, bool self_loops = true) {
  const Eigen::Index n = raw.values.rows();
  require(raw.values.cols() == n, "normalize: adjacency must be square");
  require((raw.values.array() >= Scalar(0)).all(), "normalize: entries must be nonnegative");
  Matrix<Scalar> a = raw.values;
  if (self_loops) a.diagonal().array() += Scalar(1);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_sqrt = a.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i)
    inv_sqrt(i) = inv_sqrt(i) > Scalar(0) ? Scalar(1) / std::sqrt(inv_sqrt(i)) : Scalar(0);
  Matrix<Scalar> norm = inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
  return Adjacency<Scalar>::from_dense(std::move(norm));
}

template <typename Scalar>
ChannelGraphs<Scalar> fuse(Adjacency<Scalar> coo, Adjacency<Scalar> sim) {
  if (coo.size() != sim.size()) throw ContractError("fuse: channel dimensions differ");
  ChannelGraphs<Scalar> g;
  g[Channel::coo] = std::move(coo);
  g[Channel::sim] = std::move(sim);
  return g;
}

/// Graph file: per present channel, a header `|C| channel nnz` followed by
/// `i j value` lines in row-major order.
void write_graphs(std::ostream& out, const ChannelGraphs<double>& graphs);
ChannelGraphs<double> read_graphs(std::istream& in, const std::string& source);
void save_graphs(const std::string& path, const ChannelGraphs<double>& graphs);
ChannelGraphs<double> load_graphs(const std::string& path);

}  // namespace smgcn
