#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smgcn/corpus.hpp"
#include "smgcn/metrics.hpp"
#include "smgcn/model.hpp"

namespace smgcn {

/// Ablation variants: which graph channels and whether pseudo-labels are used.
enum class Variant { full, no_sim, no_coo, no_graph, encoder_only };

const char* to_string(Variant v);
Variant parse_variant(const std::string& name);

enum class SemiSource { encoder, gcn };

struct TrainConfig {
  // Model
  int dim = 64;
  int num_layers = 2;
  double dropout = 0.5;
  double leaky_slope = kDefaultLeakySlope;
  ChannelMerge channel_merge = ChannelMerge::mean;
  bool final_activation = false;

  // Optimization
  double learning_rate = 1e-3;
  int batch_size = 64;
  int max_epochs = 8;
  int phase1_epochs = 2;
  LossReduction loss_reduction = LossReduction::mean;

  // Inputs
  int max_query_len = 16;
  int max_category_len = 20;

  // Labels and graphs
  double label_threshold = 0.5;
  double alpha = 0.65;
  SemiLabelConfig semi;
  double warmup_fraction = 0.2;  // used when semi.warmup_steps == 0
  SemiSource semi_source = SemiSource::encoder;
  bool self_loops = true;
  EdgeWeight similarity_edge_weight = EdgeWeight::cosine;

  Variant variant = Variant::full;
  std::uint64_t seed = 1;

  void validate() const;
  GcnOptions gcn_options() const { return {channel_merge, final_activation, leaky_slope}; }
};

struct EpochRecord {
  int epoch = 0;
  int phase = 1;
  double loss_sum = 0.0;
  double loss_mean = 0.0;
  double val_micro_f1 = 0.0;
  double val_macro_f1 = 0.0;
  double tau = 1.0;  // 1.0 while pseudo-labels are off
  long semi_positives = 0;

  std::string to_json() const;
};

struct TrainResult {
  ModelParams params;             // best by validation micro-F1
  ChannelGraphs<double> graphs;   // graphs the best parameters were trained with
  OptimizerState optimizer;       // state at the best epoch
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  std::vector<TokenSequence> category_tokens;
  Vocabulary vocabulary;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Two-phase training. Phase 1 uses identity propagation and click labels
/// only; at the boundary the co-occurrence and similarity graphs are built
/// and frozen, then phase 2 trains the full model with pseudo-labels.
TrainResult train(const Dataset& dataset, const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Graphs for a variant given the phase-1 model.
ChannelGraphs<double> build_variant_graphs(const Dataset& dataset, const ModelParams& params,
                                           const std::vector<TokenSequence>& category_tokens,
                                           const TrainConfig& config);

/// Gold label matrix (B x |C|) for a sample list.
MatrixXd label_matrix(std::span<const ClickSample> samples, Eigen::Index num_categories);

std::vector<TokenSequence> tokenize_queries(std::span<const ClickSample> samples, const Vocabulary& vocab,
                                            std::size_t max_len);
std::vector<TokenSequence> tokenize_categories(const std::vector<CategoryRecord>& categories, const Vocabulary& vocab,
                                               std::size_t max_len);

/// Scores for every sample of a split under a trained model.
MatrixXd score_split(const TrainResult& model, const Dataset& dataset, Split split, const TrainConfig& config);

struct AblationReport {
  Variant variant = Variant::full;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  std::map<std::string, MetricReport> test;  // keyed by slice name

  std::string to_json() const;
};

AblationReport ablate(const Dataset& dataset, TrainConfig config, Variant variant);

struct GradCheckConfig {
  int num_categories = 5;
  int dim = 6;
  int vocab_size = 15;
  int batch_size = 4;
  int num_layers = 2;
  double step = 1e-4;
  double tolerance = 1e-4;
  ChannelMerge channel_merge = ChannelMerge::mean;
  LossReduction loss_reduction = LossReduction::sum;
  std::uint64_t seed = 3;
  /// Test hook applied to the analytic gradients before comparison.
  std::function<void(ModelParams&)> corrupt;
};

struct GradCheckReport {
  std::vector<std::pair<std::string, double>> max_relative_error;  // per parameter group
  bool labels_frozen = true;  // fused labels were identical before and after differencing
  double tolerance = 1e-4;

  double worst() const;
  bool passed() const { return labels_frozen && worst() < tolerance; }
  std::string to_json() const;
};

/// Central finite differences through encoder -> GCN -> sigmoid -> BCE with
/// pseudo-labels computed once and held fixed.
GradCheckReport grad_check(const GradCheckConfig& config);

}  // namespace smgcn
