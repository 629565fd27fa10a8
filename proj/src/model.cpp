#include "smgcn/model.hpp"

#include <cmath>

namespace smgcn {

const char* to_string(ChannelMerge merge) {
  switch (merge) {
    case ChannelMerge::mean: return "mean";
    case ChannelMerge::sum: return "sum";
    case ChannelMerge::concat_project: return "concat-project";
  }
  return "?";
}

ChannelMerge parse_channel_merge(const std::string& name) {
  if (name == "mean") return ChannelMerge::mean;
  if (name == "sum") return ChannelMerge::sum;
  if (name == "concat-project") return ChannelMerge::concat_project;
  throw config_error("unknown channel_merge '" + name + "' (expected mean|sum|concat-project)");
}

ModelParams ModelParams::init(Eigen::Index vocab_size, Eigen::Index dim, int num_layers, Eigen::Index num_categories,
                              ChannelMerge merge, double dropout, std::mt19937_64& rng) {
  require(num_layers >= 1 && dim >= 1 && vocab_size >= 1 && num_categories >= 1, "ModelParams::init: bad dimensions");
  ModelParams p;
  p.encoder = EncoderParams<double>::random(vocab_size, dim, dim, rng);
  p.encoder.dropout_rate = dropout;
  p.gcn = GcnParams<double>::random(std::vector<Eigen::Index>(static_cast<std::size_t>(num_layers) + 1, dim), merge, rng);
  p.classifier_bias = MatrixXd::Zero(1, num_categories);
  return p;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  z.for_each([](const std::string&, MatrixXd& m) { m.setZero(); });
  return z;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each([&](const std::string&, const MatrixXd& m) { ok = ok && m.allFinite(); });
  return ok;
}

MatrixXd sigmoid(const MatrixXd& logits) {
  return logits.unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
}

MatrixXd scores_from_embeddings(const MatrixXd& query_emb, const MatrixXd& category_emb, const MatrixXd& bias) {
  if (query_emb.cols() != category_emb.cols() || bias.cols() != category_emb.rows())
    throw ContractError("scores_from_embeddings: dimension mismatch");
  MatrixXd logits = query_emb * category_emb.transpose();
  logits.rowwise() += bias.row(0);
  return sigmoid(logits);
}

ForwardPass model_forward(const ModelParams& params, const ChannelGraphs<double>& graphs,
                          std::span<const TokenSequence> category_tokens, std::span<const TokenSequence> query_tokens,
                          Mode mode, std::mt19937_64& rng, const GcnOptions& gcn_options) {
  if (static_cast<Eigen::Index>(category_tokens.size()) != params.num_categories())
    throw ContractError("model_forward: category count does not match classifier");
  ForwardPass pass;
  pass.queries = encode(params.encoder, query_tokens, mode, rng);
  pass.categories = encode(params.encoder, category_tokens, mode, rng);
  pass.gcn = gcn_forward(params.gcn, graphs, pass.categories.output, gcn_options);
  pass.logits = pass.queries.output * pass.gcn.output().transpose();
  pass.logits.rowwise() += params.classifier_bias.row(0);
  pass.probs = sigmoid(pass.logits);
  return pass;
}

ModelParams model_backward(const ModelParams& params, const ChannelGraphs<double>& graphs, const ForwardPass& pass,
                           const MatrixXd& logit_grad, const GcnOptions& gcn_options) {
  if (logit_grad.rows() != pass.logits.rows() || logit_grad.cols() != pass.logits.cols())
    throw ContractError("model_backward: logit gradient shape mismatch");
  ModelParams grads;
  grads.classifier_bias = logit_grad.colwise().sum();

  const MatrixXd& h = pass.gcn.output();
  const MatrixXd query_grad = logit_grad * h;
  const MatrixXd h_grad = logit_grad.transpose() * pass.queries.output;
  auto gcn = gcn_backward(params.gcn, graphs, pass.gcn, h_grad, gcn_options);
  grads.gcn = std::move(gcn.grads);

  auto enc = EncoderGrads<double>::zeros_like(params.encoder);
  encode_backward(params.encoder, pass.queries, query_grad, enc);
  encode_backward(params.encoder, pass.categories, gcn.input_grad, enc);
  grads.encoder.embedding = std::move(enc.embedding);
  grads.encoder.projection = std::move(enc.projection);
  grads.encoder.bias = std::move(enc.bias);
  grads.encoder.dropout_rate = params.encoder.dropout_rate;
  grads.encoder.leaky_slope = params.encoder.leaky_slope;
  return grads;
}

MatrixXd category_representations(const ModelParams& params, const ChannelGraphs<double>& graphs,
                                  std::span<const TokenSequence> category_tokens, const GcnOptions& gcn_options) {
  const MatrixXd c = encode_eval(params.encoder, category_tokens);
  return gcn_forward(params.gcn, graphs, c, gcn_options).output();
}

MatrixXd predict(const ModelParams& params, const ChannelGraphs<double>& graphs,
                 std::span<const TokenSequence> category_tokens, std::span<const TokenSequence> query_tokens,
                 const GcnOptions& gcn_options) {
  const MatrixXd h = category_representations(params, graphs, category_tokens, gcn_options);
  const MatrixXd q = encode_eval(params.encoder, query_tokens);
  return scores_from_embeddings(q, h, params.classifier_bias);
}

LossResult bce_loss(const MatrixXd& predicted, const MatrixXd& targets, LossReduction reduction) {
  if (predicted.rows() != targets.rows() || predicted.cols() != targets.cols())
    throw ContractError("bce_loss: shape mismatch");
  if (!predicted.allFinite() || !targets.allFinite()) throw divergence_error("bce_loss: non-finite input");
  LossResult r;
  for (Eigen::Index i = 0; i < predicted.rows(); ++i) {
    for (Eigen::Index j = 0; j < predicted.cols(); ++j) {
      const double p = std::clamp(predicted(i, j), kProbabilityClamp, 1.0 - kProbabilityClamp);
      const double y = targets(i, j);
      r.sum -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
  }
  const double n = double(predicted.size());
  r.mean = n > 0 ? r.sum / n : 0.0;
  r.logit_grad = predicted - targets;
  if (reduction == LossReduction::mean && n > 0) r.logit_grad /= n;
  return r;
}

void adam_update(MatrixXd& param, MatrixXd& first_moment, MatrixXd& second_moment, const MatrixXd& grad,
                 std::int64_t step, const AdamOptions& o) {
  require(step >= 1, "adam_update: step is 1-based");
  first_moment = o.beta1 * first_moment + (1.0 - o.beta1) * grad;
  second_moment = o.beta2 * second_moment + (1.0 - o.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(o.beta1, double(step));
  const double c2 = 1.0 - std::pow(o.beta2, double(step));
  param.array() -= o.learning_rate * (first_moment.array() / c1) / ((second_moment.array() / c2).sqrt() + o.epsilon);
}

OptimizerState OptimizerState::for_params(const ModelParams& params, const AdamOptions& options) {
  OptimizerState s;
  s.options = options;
  s.first_moment = params.zeros_like();
  s.second_moment = params.zeros_like();
  return s;
}

void OptimizerState::apply(ModelParams& params, const ModelParams& grads) {
  ++step;
  std::vector<MatrixXd*> p, g, m, v;
  params.for_each([&](const std::string&, MatrixXd& x) { p.push_back(&x); });
  grads.for_each([&](const std::string&, const MatrixXd& x) { g.push_back(const_cast<MatrixXd*>(&x)); });
  first_moment.for_each([&](const std::string&, MatrixXd& x) { m.push_back(&x); });
  second_moment.for_each([&](const std::string&, MatrixXd& x) { v.push_back(&x); });
  require(p.size() == g.size() && p.size() == m.size() && p.size() == v.size(), "OptimizerState: layout mismatch");
  for (std::size_t i = 0; i < p.size(); ++i) {
    require(p[i]->rows() == g[i]->rows() && p[i]->cols() == g[i]->cols(), "OptimizerState: gradient shape mismatch");
    adam_update(*p[i], *m[i], *v[i], *g[i], step, options);
  }
  params.encoder.embedding.row(0).setZero();
}

}  // namespace smgcn
