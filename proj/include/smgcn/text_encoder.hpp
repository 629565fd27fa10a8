#pragma once

#include <random>
#include <span>
#include <vector>

#include "smgcn/corpus.hpp"
#include "smgcn/types.hpp"

namespace smgcn {

enum class Mode { train, eval };

/// Shared query/category encoder: mean-pooled character embeddings, inverted
/// dropout on the pooled features, one affine map and a LeakyReLU.
template <typename Scalar>
struct EncoderParams {
  Matrix<Scalar> embedding;   // |V| x d_e, row 0 pinned to zero
  Matrix<Scalar> projection;  // d_e x d
  Matrix<Scalar> bias;        // 1 x d
  Scalar dropout_rate = Scalar(0.5);
  Scalar leaky_slope = Scalar(kDefaultLeakySlope);

  Eigen::Index vocab_size() const { return embedding.rows(); }
  Eigen::Index embed_dim() const { return embedding.cols(); }
  Eigen::Index output_dim() const { return projection.cols(); }

  static EncoderParams zeros(Eigen::Index vocab, Eigen::Index embed_dim, Eigen::Index out_dim) {
    EncoderParams p;
    p.embedding = Matrix<Scalar>::Zero(vocab, embed_dim);
    p.projection = Matrix<Scalar>::Zero(embed_dim, out_dim);
    p.bias = Matrix<Scalar>::Zero(1, out_dim);
    return p;
  }

  /// Gaussian embeddings, Glorot-uniform projection, zero bias.
  static EncoderParams random(Eigen::Index vocab, Eigen::Index embed_dim, Eigen::Index out_dim,
                              std::mt19937_64& rng) {
    auto p = zeros(vocab, embed_dim, out_dim);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 1; i < vocab; ++i)
      for (Eigen::Index j = 0; j < embed_dim; ++j) p.embedding(i, j) = Scalar(normal(rng));
    const double limit = std::sqrt(6.0 / double(embed_dim + out_dim));
    std::uniform_real_distribution<double> uni(-limit, limit);
    for (Eigen::Index i = 0; i < embed_dim; ++i)
      for (Eigen::Index j = 0; j < out_dim; ++j) p.projection(i, j) = Scalar(uni(rng));
    return p;
  }
};

/// Forward cache for one encoded batch.
template <typename Scalar>
struct EncoderActivation {
  std::vector<TokenSequence> tokens;
  Matrix<Scalar> pooled;         // n x d_e, before dropout
  Matrix<Scalar> dropout_scale;  // n x d_e, 0 or 1/(1-p); empty in eval mode
  Matrix<Scalar> pre_activation; // n x d
  Matrix<Scalar> output;         // n x d
  Mode mode = Mode::eval;
};

template <typename Scalar>
struct EncoderGrads {
  Matrix<Scalar> embedding;
  Matrix<Scalar> projection;
  Matrix<Scalar> bias;

  static EncoderGrads zeros_like(const EncoderParams<Scalar>& p) {
    return {Matrix<Scalar>::Zero(p.embedding.rows(), p.embedding.cols()),
            Matrix<Scalar>::Zero(p.projection.rows(), p.projection.cols()),
            Matrix<Scalar>::Zero(1, p.bias.cols())};
  }
};

/// Mean of the embedding rows named by each sequence.
template <typename Scalar>
Matrix<Scalar> mean_pool(const Matrix<Scalar>& embedding, std::span<const TokenSequence> batch) {
  Matrix<Scalar> pooled = Matrix<Scalar>::Zero(static_cast<Eigen::Index>(batch.size()), embedding.cols());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& seq = batch[i];
    if (seq.empty()) throw ContractError("encode: empty token sequence at batch index " + std::to_string(i));
    for (auto t : seq) {
      if (t < 0 || t >= embedding.rows())
        throw ContractError("encode: token id " + std::to_string(t) + " out of vocabulary range");
      pooled.row(static_cast<Eigen::Index>(i)) += embedding.row(t);
    }
    pooled.row(static_cast<Eigen::Index>(i)) /= Scalar(seq.size());
  }
  return pooled;
}

template <typename Scalar>
EncoderActivation<Scalar> encode(const EncoderParams<Scalar>& params, std::span<const TokenSequence> batch,
                                 Mode mode, std::mt19937_64& rng) {
  EncoderActivation<Scalar> act;
  act.mode = mode;
  act.tokens.assign(batch.begin(), batch.end());
  act.pooled = mean_pool(params.embedding, batch);

  Matrix<Scalar> features = act.pooled;
  if (mode == Mode::train && params.dropout_rate > Scalar(0)) {
    const double keep = 1.0 - double(params.dropout_rate);
    std::bernoulli_distribution bern(keep);
    act.dropout_scale.resize(act.pooled.rows(), act.pooled.cols());
    for (Eigen::Index i = 0; i < act.dropout_scale.rows(); ++i)
      for (Eigen::Index j = 0; j < act.dropout_scale.cols(); ++j)
        act.dropout_scale(i, j) = bern(rng) ? Scalar(1.0 / keep) : Scalar(0);
    features = features.cwiseProduct(act.dropout_scale);
  }

  act.pre_activation = features * params.projection;
  act.pre_activation.rowwise() += params.bias.row(0);
  const Scalar slope = params.leaky_slope;
  act.output = act.pre_activation.unaryExpr([slope](Scalar x) { return leaky_relu(x, slope); });
  return act;
}

/// Deterministic eval-mode encoding.
template <typename Scalar>
Matrix<Scalar> encode_eval(const EncoderParams<Scalar>& params, std::span<const TokenSequence> batch) {
  std::mt19937_64 unused(0);
  return encode(params, batch, Mode::eval, unused).output;
}

/// Accumulates parameter gradients for `act` into `grads`.
template <typename Scalar>
void encode_backward(const EncoderParams<Scalar>& params, const EncoderActivation<Scalar>& act,
                     const Matrix<Scalar>& output_grad, EncoderGrads<Scalar>& grads) {
  if (output_grad.rows() != act.output.rows() || output_grad.cols() != act.output.cols())
    throw ContractError("encode_backward: output_grad shape does not match activation");
  const Scalar slope = params.leaky_slope;
  const Matrix<Scalar> dz =
      output_grad.cwiseProduct(act.pre_activation.unaryExpr([slope](Scalar x) { return leaky_relu_grad(x, slope); }));

  const bool dropped = act.dropout_scale.size() != 0;
  const Matrix<Scalar> features = dropped ? Matrix<Scalar>(act.pooled.cwiseProduct(act.dropout_scale)) : act.pooled;
  grads.projection.noalias() += features.transpose() * dz;
  grads.bias.row(0) += dz.colwise().sum();

  Matrix<Scalar> dpooled = dz * params.projection.transpose();
  if (dropped) dpooled = dpooled.cwiseProduct(act.dropout_scale);
  for (std::size_t i = 0; i < act.tokens.size(); ++i) {
    const auto& seq = act.tokens[i];
    const Scalar inv = Scalar(1) / Scalar(seq.size());
    for (auto t : seq)
      if (t != Vocabulary::kUnknown) grads.embedding.row(t) += inv * dpooled.row(static_cast<Eigen::Index>(i));
  }
}

template <typename Scalar>
EncoderGrads<Scalar> encode_backward(const EncoderParams<Scalar>& params, const EncoderActivation<Scalar>& act,
                                     const Matrix<Scalar>& output_grad) {
  auto grads = EncoderGrads<Scalar>::zeros_like(params);
  encode_backward(params, act, output_grad, grads);
  return grads;
}

}  // namespace smgcn
