#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include "smgcn/label_graph.hpp"
#include "smgcn/types.hpp"

namespace smgcn {

/// How per-channel outputs are combined before the nonlinearity.
enum class ChannelMerge { mean, sum, concat_project };

const char* to_string(ChannelMerge merge);
ChannelMerge parse_channel_merge(const std::string& name);

struct GcnOptions {
  ChannelMerge merge = ChannelMerge::mean;
  bool final_activation = true;
  double leaky_slope = kDefaultLeakySlope;
};

/// Per-layer, per-channel transforms. `projection[l]` is used only by
/// concat_project and stacks one d_{l+1} x d_{l+1} block per channel.
template <typename Scalar>
struct GcnParams {
  std::vector<std::array<Matrix<Scalar>, kNumChannels>> weights;
  std::vector<Matrix<Scalar>> projection;

  int num_layers() const { return static_cast<int>(weights.size()); }
  Eigen::Index input_dim() const { return weights.empty() ? 0 : weights.front()[0].rows(); }
  Eigen::Index output_dim() const { return weights.empty() ? 0 : weights.back()[0].cols(); }

  static GcnParams zeros(const std::vector<Eigen::Index>& dims, ChannelMerge merge) {
    require(dims.size() >= 2, "GcnParams: need at least one layer");
    GcnParams p;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      std::array<Matrix<Scalar>, kNumChannels> w;
      for (auto& m : w) m = Matrix<Scalar>::Zero(dims[l], dims[l + 1]);
      p.weights.push_back(std::move(w));
      p.projection.push_back(merge == ChannelMerge::concat_project
                                 ? Matrix<Scalar>::Zero(kNumChannels * dims[l + 1], dims[l + 1])
                                 : Matrix<Scalar>());
    }
    return p;
  }

  /// Glorot-uniform weights, identical across channels so every channel subset
  /// starts from the same map; projections start as the channel mean.
  static GcnParams random(const std::vector<Eigen::Index>& dims, ChannelMerge merge, std::mt19937_64& rng) {
    auto p = zeros(dims, merge);
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      const double limit = std::sqrt(6.0 / double(dims[l] + dims[l + 1]));
      std::uniform_real_distribution<double> uni(-limit, limit);
      auto& w = p.weights[l];
      for (Eigen::Index i = 0; i < w[0].rows(); ++i)
        for (Eigen::Index j = 0; j < w[0].cols(); ++j) w[0](i, j) = Scalar(uni(rng));
      for (int c = 1; c < kNumChannels; ++c) w[c] = w[0];
      if (p.projection[l].size() != 0) {
        const Eigen::Index d = dims[l + 1];
        for (int c = 0; c < kNumChannels; ++c)
          p.projection[l].middleRows(c * d, d) = Matrix<Scalar>::Identity(d, d) / Scalar(kNumChannels);
      }
    }
    return p;
  }
};

template <typename Scalar>
struct GcnLayerCache {
  Matrix<Scalar> input;                                   // H^l
  std::array<Matrix<Scalar>, kNumChannels> propagated;    // A_c H^l
  std::array<Matrix<Scalar>, kNumChannels> transformed;   // A_c H^l W_c
  Matrix<Scalar> merged;                                  // pre-activation
  Matrix<Scalar> output;                                  // H^{l+1}
  bool activated = true;
};

template <typename Scalar>
struct GcnActivation {
  std::vector<GcnLayerCache<Scalar>> layers;
  const Matrix<Scalar>& output() const { return layers.back().output; }
};

namespace detail {

template <typename Scalar>
Scalar merge_scale(ChannelMerge merge, int active) {
  return merge == ChannelMerge::mean ? Scalar(1) / Scalar(active) : Scalar(1);
}

}  // namespace detail

/// H^{l+1} = LeakyReLU(merge_c(A_c H^l W^l_c)).
template <typename Scalar>
GcnActivation<Scalar> gcn_forward(const GcnParams<Scalar>& params, const ChannelGraphs<Scalar>& graphs,
                                  const Matrix<Scalar>& h0, const GcnOptions& opts = {}) {
  const int active = graphs.active_channels();
  if (active == 0) throw ContractError("gcn_forward: no active graph channels");
  if (h0.cols() != params.input_dim()) throw ContractError("gcn_forward: input width does not match layer 0");
  if (h0.rows() != graphs.num_categories()) throw ContractError("gcn_forward: node count does not match graphs");
  const Scalar slope = Scalar(opts.leaky_slope);
  const Scalar scale = detail::merge_scale<Scalar>(opts.merge, active);

  GcnActivation<Scalar> act;
  Matrix<Scalar> h = h0;
  for (int l = 0; l < params.num_layers(); ++l) {
    GcnLayerCache<Scalar> cache;
    cache.input = h;
    const Eigen::Index out_dim = params.weights[static_cast<std::size_t>(l)][0].cols();
    cache.merged = Matrix<Scalar>::Zero(h.rows(), out_dim);
    for (int c = 0; c < kNumChannels; ++c) {
      const auto& graph = graphs.channels[static_cast<std::size_t>(c)];
      if (!graph) continue;
      const auto& w = params.weights[static_cast<std::size_t>(l)][static_cast<std::size_t>(c)];
      cache.propagated[static_cast<std::size_t>(c)] = graph->apply(h);
      cache.transformed[static_cast<std::size_t>(c)] = cache.propagated[static_cast<std::size_t>(c)] * w;
      if (opts.merge == ChannelMerge::concat_project)
        cache.merged.noalias() += cache.transformed[static_cast<std::size_t>(c)] *
                                  params.projection[static_cast<std::size_t>(l)].middleRows(c * out_dim, out_dim);
      else
        cache.merged += scale * cache.transformed[static_cast<std::size_t>(c)];
    }
    cache.activated = opts.final_activation || l + 1 < params.num_layers();
    cache.output = cache.activated ? Matrix<Scalar>(cache.merged.unaryExpr([slope](Scalar x) { return leaky_relu(x, slope); }))
                                   : cache.merged;
    h = cache.output;
    act.layers.push_back(std::move(cache));
  }
  return act;
}

template <typename Scalar>
struct GcnBackward {
  GcnParams<Scalar> grads;
  Matrix<Scalar> input_grad;  // d loss / d H^0
};

template <typename Scalar>
GcnBackward<Scalar> gcn_backward(const GcnParams<Scalar>& params, const ChannelGraphs<Scalar>& graphs,
                                 const GcnActivation<Scalar>& act, const Matrix<Scalar>& output_grad,
                                 const GcnOptions& opts = {}) {
  if (act.layers.size() != params.weights.size()) throw ContractError("gcn_backward: activation/params layer mismatch");
  if (output_grad.rows() != act.output().rows() || output_grad.cols() != act.output().cols())
    throw ContractError("gcn_backward: output_grad shape mismatch");
  const Scalar slope = Scalar(opts.leaky_slope);
  const Scalar scale = detail::merge_scale<Scalar>(opts.merge, graphs.active_channels());

  GcnBackward<Scalar> out;
  std::vector<Eigen::Index> dims{params.input_dim()};
  for (const auto& w : params.weights) dims.push_back(w[0].cols());
  out.grads = GcnParams<Scalar>::zeros(dims, opts.merge);

  Matrix<Scalar> grad = output_grad;
  for (int l = params.num_layers() - 1; l >= 0; --l) {
    const auto& cache = act.layers[static_cast<std::size_t>(l)];
    const auto lu = static_cast<std::size_t>(l);
    const Matrix<Scalar> dmerged =
        cache.activated ? Matrix<Scalar>(grad.cwiseProduct(cache.merged.unaryExpr([slope](Scalar x) { return leaky_relu_grad(x, slope); })))
                        : grad;
    const Eigen::Index out_dim = dmerged.cols();
    Matrix<Scalar> dinput = Matrix<Scalar>::Zero(cache.input.rows(), cache.input.cols());
    for (int c = 0; c < kNumChannels; ++c) {
      const auto& graph = graphs.channels[static_cast<std::size_t>(c)];
      if (!graph) continue;
      const auto cu = static_cast<std::size_t>(c);
      Matrix<Scalar> dtransformed;
      if (opts.merge == ChannelMerge::concat_project) {
        const auto block = params.projection[lu].middleRows(c * out_dim, out_dim);
        out.grads.projection[lu].middleRows(c * out_dim, out_dim).noalias() += cache.transformed[cu].transpose() * dmerged;
        dtransformed = dmerged * block.transpose();
      } else {
        dtransformed = scale * dmerged;
      }
      out.grads.weights[lu][cu].noalias() += cache.propagated[cu].transpose() * dtransformed;
      const Matrix<Scalar> dpropagated = dtransformed * params.weights[lu][cu].transpose();
      dinput += graph->apply_transpose(dpropagated);
    }
    grad = std::move(dinput);
  }
  out.input_grad = std::move(grad);
  return out;
}

}  // namespace smgcn
