#pragma once

#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "smgcn/gcn.hpp"
#include "smgcn/label_graph.hpp"
#include "smgcn/pseudo_label.hpp"
#include "smgcn/text_encoder.hpp"
#include "smgcn/types.hpp"

namespace smgcn {

/// Encoder, multi-channel GCN and classifier bias. Gradients use the same type.
struct ModelParams {
  EncoderParams<double> encoder;
  GcnParams<double> gcn;
  MatrixXd classifier_bias;  // 1 x |C|

  Eigen::Index num_categories() const { return classifier_bias.cols(); }
  Eigen::Index dim() const { return encoder.output_dim(); }

  static ModelParams init(Eigen::Index vocab_size, Eigen::Index dim, int num_layers, Eigen::Index num_categories,
                          ChannelMerge merge, double dropout, std::mt19937_64& rng);
  ModelParams zeros_like() const;

  /// Visits every trainable tensor with a stable name, in serialization order.
  template <typename Self, typename F>
  static void visit(Self& self, F&& f) {
    f("encoder.embedding", self.encoder.embedding);
    f("encoder.projection", self.encoder.projection);
    f("encoder.bias", self.encoder.bias);
    static const char* channel_names[kNumChannels] = {"coo", "sim"};
    for (std::size_t l = 0; l < self.gcn.weights.size(); ++l) {
      for (int c = 0; c < kNumChannels; ++c)
        f("gcn.layer" + std::to_string(l) + "." + channel_names[c], self.gcn.weights[l][static_cast<std::size_t>(c)]);
      if (self.gcn.projection[l].size() != 0)
        f("gcn.layer" + std::to_string(l) + ".projection", self.gcn.projection[l]);
    }
    f("classifier.bias", self.classifier_bias);
  }
  template <typename F>
  void for_each(F&& f) { visit(*this, std::forward<F>(f)); }
  template <typename F>
  void for_each(F&& f) const { visit(*this, std::forward<F>(f)); }

  bool all_finite() const;
};

/// Cached forward pass over one query batch and all categories.
struct ForwardPass {
  EncoderActivation<double> queries;
  EncoderActivation<double> categories;
  GcnActivation<double> gcn;
  MatrixXd logits;  // B x |C|
  MatrixXd probs;
};

ForwardPass model_forward(const ModelParams& params, const ChannelGraphs<double>& graphs,
                          std::span<const TokenSequence> category_tokens, std::span<const TokenSequence> query_tokens,
                          Mode mode, std::mt19937_64& rng, const GcnOptions& gcn_options);

/// Gradients of a loss with respect to every parameter, given dL/dlogits.
ModelParams model_backward(const ModelParams& params, const ChannelGraphs<double>& graphs, const ForwardPass& pass,
                           const MatrixXd& logit_grad, const GcnOptions& gcn_options);

/// Post-GCN category representations H, eval mode.
MatrixXd category_representations(const ModelParams& params, const ChannelGraphs<double>& graphs,
                                  std::span<const TokenSequence> category_tokens, const GcnOptions& gcn_options);

MatrixXd sigmoid(const MatrixXd& logits);

/// sigmoid(Q H^T + b)
MatrixXd scores_from_embeddings(const MatrixXd& query_emb, const MatrixXd& category_emb, const MatrixXd& bias);

/// Eval-mode scores for a query batch.
MatrixXd predict(const ModelParams& params, const ChannelGraphs<double>& graphs,
                 std::span<const TokenSequence> category_tokens, std::span<const TokenSequence> query_tokens,
                 const GcnOptions& gcn_options);

enum class LossReduction { mean, sum };

struct LossResult {
  double sum = 0.0;
  double mean = 0.0;
  MatrixXd logit_grad;  // scaled by the reduction
};

inline constexpr double kProbabilityClamp = 1e-7;

/// Binary cross-entropy summed over samples and categories, with the
/// gradient with respect to the pre-sigmoid logits.
LossResult bce_loss(const MatrixXd& predicted, const MatrixXd& targets, LossReduction reduction);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One Adam update for a single tensor; `step` is 1-based.
void adam_update(MatrixXd& param, MatrixXd& first_moment, MatrixXd& second_moment, const MatrixXd& grad,
                 std::int64_t step, const AdamOptions& options);

struct OptimizerState {
  AdamOptions options;
  ModelParams first_moment;
  ModelParams second_moment;
  std::int64_t step = 0;

  static OptimizerState for_params(const ModelParams& params, const AdamOptions& options);
  /// Applies one update and re-pins the padding embedding row to zero.
  void apply(ModelParams& params, const ModelParams& grads);
};

}  // namespace smgcn
