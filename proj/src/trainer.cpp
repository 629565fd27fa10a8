#include "smgcn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace smgcn {

namespace {

constexpr std::uint64_t kShuffleStream = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kDropoutStream = 0xC2B2AE3D27D4EB4FULL;

bool uses_graphs(Variant v) { return v == Variant::full || v == Variant::no_sim || v == Variant::no_coo; }
bool uses_semi_labels(Variant v) { return v != Variant::encoder_only; }

template <typename T>
std::vector<T> gather(std::span<const T> items, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(items[i]);
  return out;
}

}  // namespace

const char* to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_sim: return "no_sim";
    case Variant::no_coo: return "no_coo";
    case Variant::no_graph: return "no_graph";
    case Variant::encoder_only: return "encoder_only";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  for (auto v : {Variant::full, Variant::no_sim, Variant::no_coo, Variant::no_graph, Variant::encoder_only})
    if (name == to_string(v)) return v;
  throw config_error("unknown variant '" + name + "' (expected full|no_sim|no_coo|no_graph|encoder_only)");
}

void TrainConfig::validate() const {
  if (dim < 1 || num_layers < 1) throw config_error("dim and num_layers must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw config_error("dropout must lie in [0, 1)");
  if (!(learning_rate > 0.0)) throw config_error("learning_rate must be > 0");
  if (batch_size < 1) throw config_error("batch_size must be >= 1");
  if (max_epochs < 1) throw config_error("max_epochs must be >= 1");
  if (phase1_epochs < 0 || phase1_epochs > max_epochs)
    throw config_error("phase1_epochs must lie in [0, max_epochs]");
  if (max_query_len < 1 || max_category_len < 1) throw config_error("max lengths must be >= 1");
  if (!(label_threshold > 0.0 && label_threshold < 1.0)) throw config_error("label_threshold must lie in (0, 1)");
  if (!(alpha > -1.0 && alpha < 1.0)) throw config_error("alpha must lie in (-1, 1)");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) throw config_error("warmup_fraction must lie in [0, 1]");
  semi.validate();
}

std::string EpochRecord::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["phase"] = phase;
  j["loss_sum"] = loss_sum;
  j["loss_mean"] = loss_mean;
  j["val_micro_f1"] = val_micro_f1;
  j["val_macro_f1"] = val_macro_f1;
  j["tau"] = tau;
  j["semi_positives"] = semi_positives;
  return j.dump();
}

MatrixXd label_matrix(std::span<const ClickSample> samples, Eigen::Index num_categories) {
  MatrixXd y = MatrixXd::Zero(static_cast<Eigen::Index>(samples.size()), num_categories);
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (auto c : samples[i].clicked_labels) {
      require(c >= 0 && c < num_categories, "label_matrix: label id out of range");
      y(static_cast<Eigen::Index>(i), c) = 1.0;
    }
  return y;
}

std::vector<TokenSequence> tokenize_queries(std::span<const ClickSample> samples, const Vocabulary& vocab,
                                            std::size_t max_len) {
  std::vector<TokenSequence> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    auto t = tokenize(s.raw_query, max_len, vocab);
    if (t.empty()) throw data_error("query '" + s.raw_query + "' has no tokens");
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<TokenSequence> tokenize_categories(const std::vector<CategoryRecord>& categories, const Vocabulary& vocab,
                                               std::size_t max_len) {
  std::vector<TokenSequence> out;
  for (const auto& c : categories) {
    auto t = category_tokens(c, max_len, vocab);
    if (t.empty()) throw data_error("category " + std::to_string(c.id) + " has no tokens");
    out.push_back(std::move(t));
  }
  return out;
}

ChannelGraphs<double> build_variant_graphs(const Dataset& dataset, const ModelParams& params,
                                           const std::vector<TokenSequence>& category_tokens,
                                           const TrainConfig& config) {
  const auto n = static_cast<Eigen::Index>(dataset.num_categories());
  if (!uses_graphs(config.variant)) return ChannelGraphs<double>::identity(n);
  ChannelGraphs<double> graphs;
  if (config.variant != Variant::no_coo) {
    const auto raw = build_cooccurrence<double>(dataset.train, n);
    graphs[Channel::coo] = normalize(raw, config.self_loops);
  }
  if (config.variant != Variant::no_sim) {
    const MatrixXd c = encode_eval(params.encoder, std::span<const TokenSequence>(category_tokens));
    const auto raw = build_similarity<double>(c, config.alpha, config.similarity_edge_weight);
    graphs[Channel::sim] = normalize(raw, config.self_loops);
  }
  return graphs;
}

MatrixXd score_split(const TrainResult& model, const Dataset& dataset, Split split, const TrainConfig& config) {
  const auto queries = tokenize_queries(dataset.samples(split), model.vocabulary,
                                        static_cast<std::size_t>(config.max_query_len));
  return predict(model.params, model.graphs, model.category_tokens, queries, config.gcn_options());
}

TrainResult train(const Dataset& dataset, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  dataset.validate();
  if (dataset.train.empty()) throw data_error("training split is empty");
  if (dataset.validation.empty()) throw data_error("validation split is empty");

  const auto n = static_cast<Eigen::Index>(dataset.num_categories());
  const GcnOptions gcn_opts = config.gcn_options();

  TrainResult result;
  result.vocabulary = dataset.vocabulary;
  result.category_tokens =
      tokenize_categories(dataset.categories, dataset.vocabulary, static_cast<std::size_t>(config.max_category_len));
  const auto train_tokens =
      tokenize_queries(dataset.train, dataset.vocabulary, static_cast<std::size_t>(config.max_query_len));
  const auto val_tokens =
      tokenize_queries(dataset.validation, dataset.vocabulary, static_cast<std::size_t>(config.max_query_len));
  const MatrixXd val_gold = label_matrix(dataset.validation, n);
  const std::span<const TokenSequence> cats(result.category_tokens);

  std::mt19937_64 init_rng(config.seed);
  std::mt19937_64 shuffle_rng(config.seed ^ kShuffleStream);
  std::mt19937_64 dropout_rng(config.seed ^ kDropoutStream);

  ModelParams params = ModelParams::init(static_cast<Eigen::Index>(dataset.vocabulary.size()), config.dim,
                                         config.num_layers, n, config.channel_merge, config.dropout, init_rng);
  params.encoder.leaky_slope = config.leaky_slope;
  OptimizerState optimizer = OptimizerState::for_params(params, {config.learning_rate, 0.9, 0.999, 1e-8});
  ChannelGraphs<double> graphs = ChannelGraphs<double>::identity(n);

  const std::size_t num_train = dataset.train.size();
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const std::int64_t batches_per_epoch = static_cast<std::int64_t>((num_train + batch - 1) / batch);
  SemiLabelConfig semi = config.semi;
  if (semi.warmup_steps == 0)
    semi.warmup_steps = static_cast<std::int64_t>(
        std::llround(config.warmup_fraction * double(batches_per_epoch * (config.max_epochs - config.phase1_epochs))));

  std::vector<std::size_t> order(num_train);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::int64_t phase2_step = 0;
  double best_val = -1.0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const bool phase2 = epoch > config.phase1_epochs;
    if (phase2 && epoch == config.phase1_epochs + 1)
      graphs = build_variant_graphs(dataset, params, result.category_tokens, config);
    const bool semi_on = phase2 && uses_semi_labels(config.variant);

    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.phase = phase2 ? 2 : 1;
    double entries = 0.0;
    for (std::size_t start = 0; start < num_train; start += batch) {
      const std::size_t end = std::min(num_train, start + batch);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const auto batch_tokens = gather(std::span<const TokenSequence>(train_tokens), idx);
      const auto batch_samples = gather(std::span<const ClickSample>(dataset.train), idx);
      const MatrixXd click = label_matrix(batch_samples, n);

      MatrixXd targets = click;
      if (semi_on) {
        const double tau = tau_at(phase2_step, semi);
        rec.tau = tau;
        const MatrixXd q = encode_eval(params.encoder, std::span<const TokenSequence>(batch_tokens));
        const MatrixXd c = config.semi_source == SemiSource::encoder
                               ? encode_eval(params.encoder, cats)
                               : category_representations(params, graphs, cats, gcn_opts);
        const MatrixXd semi_y = semi_labels(q, c, tau);
        rec.semi_positives += (semi_y.array() > 0.0).count();
        targets = fuse_labels(click, semi_y).values;
      }

      const ForwardPass pass = model_forward(params, graphs, cats, batch_tokens, Mode::train, dropout_rng, gcn_opts);
      const LossResult loss = bce_loss(pass.probs, targets, config.loss_reduction);
      if (!std::isfinite(loss.sum))
        throw divergence_error("loss diverged at epoch " + std::to_string(epoch) + ", batch starting " +
                               std::to_string(start));
      rec.loss_sum += loss.sum;
      entries += double(pass.probs.size());
      const ModelParams grads = model_backward(params, graphs, pass, loss.logit_grad, gcn_opts);
      optimizer.apply(params, grads);
      if (!params.all_finite())
        throw divergence_error("non-finite parameters after update at epoch " + std::to_string(epoch));
      if (phase2) ++phase2_step;
    }
    rec.loss_mean = entries > 0 ? rec.loss_sum / entries : 0.0;

    const MatrixXd val_scores = predict(params, graphs, cats, val_tokens, gcn_opts);
    EvalOptions eval_opts;
    eval_opts.threshold = config.label_threshold;
    const MetricReport val = evaluate(val_scores, val_gold, {}, eval_opts);
    rec.val_micro_f1 = val.micro.f1;
    rec.val_macro_f1 = val.macro.f1;
    result.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_micro_f1 > best_val) {
      best_val = rec.val_micro_f1;
      result.best_epoch = epoch;
      result.params = params;
      result.graphs = graphs;
      result.optimizer = optimizer;
    }
  }
  return result;
}

std::string AblationReport::to_json() const {
  nlohmann::ordered_json j;
  j["variant"] = smgcn::to_string(variant);
  j["best_epoch"] = best_epoch;
  auto epochs_json = nlohmann::ordered_json::array();
  for (const auto& e : epochs) epochs_json.push_back(nlohmann::ordered_json::parse(e.to_json()));
  j["epochs"] = std::move(epochs_json);
  nlohmann::ordered_json t = nlohmann::ordered_json::object();
  for (const auto& [slice, report] : test) t[slice] = nlohmann::ordered_json::parse(report.to_json());
  j["test"] = std::move(t);
  return j.dump();
}

AblationReport ablate(const Dataset& dataset, TrainConfig config, Variant variant) {
  config.variant = variant;
  const TrainResult model = train(dataset, config);
  AblationReport report;
  report.variant = variant;
  report.epochs = model.epochs;
  report.best_epoch = model.best_epoch;
  const MatrixXd scores = score_split(model, dataset, Split::test, config);
  const MatrixXd gold = label_matrix(dataset.test, static_cast<Eigen::Index>(dataset.num_categories()));
  const auto flags = dataset.head_flags();
  for (auto slice : {Slice::all, Slice::head, Slice::tail}) {
    EvalOptions opts;
    opts.threshold = config.label_threshold;
    opts.slice = slice;
    report.test[to_string(slice)] = evaluate(scores, gold, flags, opts);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Gradient check

double GradCheckReport::worst() const {
  double w = 0.0;
  for (const auto& [name, err] : max_relative_error) w = std::max(w, err);
  return w;
}

std::string GradCheckReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json groups = nlohmann::ordered_json::object();
  for (const auto& [name, err] : max_relative_error) groups[name] = err;
  j["max_relative_error"] = std::move(groups);
  j["worst"] = worst();
  j["tolerance"] = tolerance;
  j["labels_frozen"] = labels_frozen;
  j["passed"] = passed();
  return j.dump();
}

GradCheckReport grad_check(const GradCheckConfig& cfg) {
  require(cfg.num_categories >= 2 && cfg.vocab_size >= 3 && cfg.dim >= 1, "grad_check: instance too small");
  std::mt19937_64 rng(cfg.seed);
  const Eigen::Index n = cfg.num_categories;

  ModelParams params = ModelParams::init(cfg.vocab_size, cfg.dim, cfg.num_layers, n, cfg.channel_merge, 0.5, rng);
  std::normal_distribution<double> normal(0.0, 0.5);
  for (Eigen::Index j = 0; j < n; ++j) params.classifier_bias(0, j) = normal(rng);
  for (auto& proj : params.gcn.projection)
    for (Eigen::Index i = 0; i < proj.size(); ++i) proj.data()[i] += normal(rng);

  // Token ids avoid the pinned padding row.
  std::uniform_int_distribution<TokenId> token(1, cfg.vocab_size - 1);
  std::uniform_int_distribution<int> length(1, 5);
  auto random_sequences = [&](int count) {
    std::vector<TokenSequence> out(static_cast<std::size_t>(count));
    for (auto& s : out) {
      const int len = length(rng);
      for (int k = 0; k < len; ++k) s.push_back(token(rng));
    }
    return out;
  };
  const auto cats = random_sequences(cfg.num_categories);
  const auto queries = random_sequences(cfg.batch_size);

  // Random nonnegative graphs, one channel sparse enough to store sparse.
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  RawAdjacency<double> coo{MatrixXd::Zero(n, n), AdjacencyKind::cooccurrence};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && uni(rng) < 0.5) coo.values(i, j) = uni(rng);
  const MatrixXd c0 = encode_eval(params.encoder, std::span<const TokenSequence>(cats));
  const auto sim = build_similarity<double>(c0, 0.0);
  const auto graphs = fuse(normalize(coo), normalize(sim));

  GcnOptions opts;
  opts.merge = cfg.channel_merge;

  // Labels: random clicks fused with pseudo-labels taken at the base point.
  MatrixXd click = MatrixXd::Zero(cfg.batch_size, n);
  for (Eigen::Index i = 0; i < click.size(); ++i) click.data()[i] = uni(rng) < 0.3 ? 1.0 : 0.0;
  const MatrixXd q0 = encode_eval(params.encoder, std::span<const TokenSequence>(queries));
  const MatrixXd frozen = fuse_labels(click, semi_labels(q0, c0, 0.2)).values;
  const MatrixXd frozen_copy = frozen;

  const std::uint64_t dropout_seed = cfg.seed ^ kDropoutStream;
  auto loss_at = [&](const ModelParams& p) {
    std::mt19937_64 drop(dropout_seed);
    const auto pass = model_forward(p, graphs, cats, queries, Mode::train, drop, opts);
    return bce_loss(pass.probs, frozen, cfg.loss_reduction).sum /
           (cfg.loss_reduction == LossReduction::mean ? double(pass.probs.size()) : 1.0);
  };

  std::mt19937_64 drop(dropout_seed);
  const auto pass = model_forward(params, graphs, cats, queries, Mode::train, drop, opts);
  const auto loss = bce_loss(pass.probs, frozen, cfg.loss_reduction);
  ModelParams analytic = model_backward(params, graphs, pass, loss.logit_grad, opts);
  if (cfg.corrupt) cfg.corrupt(analytic);

  std::vector<std::pair<std::string, MatrixXd*>> analytic_tensors;
  analytic.for_each([&](const std::string& name, MatrixXd& m) { analytic_tensors.emplace_back(name, &m); });

  GradCheckReport report;
  report.tolerance = cfg.tolerance;
  ModelParams probe = params;
  std::size_t k = 0;
  probe.for_each([&](const std::string& name, MatrixXd& tensor) {
    const MatrixXd& a = *analytic_tensors[k++].second;
    const bool embedding = name == "encoder.embedding";
    MatrixXd numeric = MatrixXd::Zero(tensor.rows(), tensor.cols());
    for (Eigen::Index i = 0; i < tensor.rows(); ++i) {
      if (embedding && i == Vocabulary::kUnknown) continue;
      for (Eigen::Index j = 0; j < tensor.cols(); ++j) {
        const double saved = tensor(i, j);
        tensor(i, j) = saved + cfg.step;
        const double up = loss_at(probe);
        tensor(i, j) = saved - cfg.step;
        const double down = loss_at(probe);
        tensor(i, j) = saved;
        numeric(i, j) = (up - down) / (2.0 * cfg.step);
      }
    }
    const double scale = std::max({a.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), 1e-12});
    report.max_relative_error.emplace_back(name, (a - numeric).cwiseAbs().maxCoeff() / scale);
  });
  report.labels_frozen = frozen == frozen_copy;
  return report;
}

}  // namespace smgcn
