#include <doctest.h>

#include <cmath>

#include "smgcn/trainer.hpp"

using namespace smgcn;

namespace {

const Dataset& small_dataset() {
  static const Dataset ds = [] {
    GeneratorConfig g;
    g.num_categories = 20;
    g.vocab_size = 200;
    g.num_samples = 3000;
    g.validation_size = 200;
    g.test_size = 100;
    return generate_synthetic(g, 11);
  }();
  return ds;
}

TrainConfig small_train() {
  TrainConfig t;
  t.dim = 16;
  t.max_epochs = 4;
  t.phase1_epochs = 2;
  t.learning_rate = 0.005;
  t.dropout = 0.1;
  return t;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("scores are sigmoid of query-category dot products plus bias") {
  CHECK(scores_from_embeddings(MatrixXd::Zero(3, 4), MatrixXd::Zero(5, 4), MatrixXd::Zero(1, 5)).isConstant(0.5));

  MatrixXd q(2, 2), h(2, 2), b(1, 2);
  q << 1, 2, -1, 0.5;
  h << 0.3, -0.2, 1, 1;
  b << 0.1, -0.4;
  const MatrixXd s = scores_from_embeddings(q, h, b);
  CHECK(s(0, 0) == doctest::Approx(sig(0.3 - 0.4 + 0.1)));
  CHECK(s(0, 1) == doctest::Approx(sig(1 + 2 - 0.4)));
  CHECK(s(1, 0) == doctest::Approx(sig(-0.3 - 0.1 + 0.1)));
  CHECK(s(1, 1) == doctest::Approx(sig(-1 + 0.5 - 0.4)));
}

TEST_CASE("binary cross-entropy values and logit gradient") {
  const MatrixXd half = MatrixXd::Constant(2, 3, 0.5);
  const auto r = bce_loss(half, MatrixXd::Ones(2, 3), LossReduction::mean);
  CHECK(r.mean == doctest::Approx(std::log(2.0)));
  CHECK(r.sum == doctest::Approx(6 * std::log(2.0)));
  CHECK(r.logit_grad.isConstant(-0.5 / 6.0));
  CHECK(bce_loss(half, MatrixXd::Ones(2, 3), LossReduction::sum).logit_grad.isConstant(-0.5));

  const MatrixXd zero = MatrixXd::Zero(1, 1), one = MatrixXd::Ones(1, 1);
  CHECK(bce_loss(zero, one, LossReduction::sum).sum == doctest::Approx(-std::log(kProbabilityClamp)));
  CHECK(std::isfinite(bce_loss(one, zero, LossReduction::sum).sum));
}

TEST_CASE("soft targets are matched at their own value") {
  const MatrixXd target = MatrixXd::Constant(1, 1, 0.85);
  double best_p = 0, best = 1e9;
  for (int k = 1; k < 100; ++k) {
    const double p = k / 100.0;
    const double l = bce_loss(MatrixXd::Constant(1, 1, p), target, LossReduction::sum).sum;
    if (l < best) best = l, best_p = p;
  }
  CHECK(best_p == doctest::Approx(0.85));
}

TEST_CASE("Adam reproduces a hand-computed three-step trace") {
  MatrixXd p = MatrixXd::Ones(1, 1), m = MatrixXd::Zero(1, 1), v = MatrixXd::Zero(1, 1);
  AdamOptions opts;
  opts.learning_rate = 0.1;
  const double grads[] = {0.5, -1.0, 2.0};
  const double want_p[] = {0.9000000019999999, 0.9366103542405653, 0.8946447927181044};
  const double want_m[] = {0.05, -0.055, 0.1505};
  const double want_v[] = {0.00025, 0.00124975, 0.00524850025};
  for (int t = 0; t < 3; ++t) {
    adam_update(p, m, v, MatrixXd::Constant(1, 1, grads[t]), t + 1, opts);
    CHECK(p(0, 0) == doctest::Approx(want_p[t]).epsilon(1e-12));
    CHECK(m(0, 0) == doctest::Approx(want_m[t]).epsilon(1e-12));
    CHECK(v(0, 0) == doctest::Approx(want_v[t]).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradients pass the finite-difference check") {
  for (auto merge : {ChannelMerge::mean, ChannelMerge::sum, ChannelMerge::concat_project}) {
    GradCheckConfig cfg;
    cfg.channel_merge = merge;
    const auto report = grad_check(cfg);
    INFO(report.to_json());
    CHECK(report.passed());
    CHECK(report.labels_frozen);
  }
  GradCheckConfig bad;
  bad.corrupt = [](ModelParams& g) { g.gcn.weights[0][1](0, 0) += 0.1; };
  CHECK_FALSE(grad_check(bad).passed());
}

TEST_CASE("a head-only loss moves a tail category's tokens through a graph edge") {
  // Category 0 (head) uses token 1, category 1 (tail) token 2, query token 3.
  std::mt19937_64 rng(4);
  const auto params = ModelParams::init(5, 4, 2, 2, ChannelMerge::mean, 0.0, rng);
  const std::vector<TokenSequence> cats{{1}, {2}};
  const std::vector<TokenSequence> queries{{3}};
  MatrixXd logit_grad = MatrixXd::Zero(1, 2);
  logit_grad(0, 0) = 1.0;
  MatrixXd s = MatrixXd::Zero(2, 2);
  s(0, 1) = s(1, 0) = 0.9;
  const auto linked = fuse(Adjacency<double>::identity(2), normalize(RawAdjacency<double>{s}));
  const GcnOptions opts;
  auto tail_grad = [&](const ChannelGraphs<double>& g) {
    std::mt19937_64 r(0);
    const auto pass = model_forward(params, g, cats, queries, Mode::eval, r, opts);
    return model_backward(params, g, pass, logit_grad, opts).encoder.embedding.row(2).norm();
  };
  CHECK(tail_grad(linked) > 0.0);
  CHECK(tail_grad(ChannelGraphs<double>::identity(2)) == 0.0);
}

TEST_CASE("training lowers the phase-1 loss and is deterministic") {
  auto cfg = small_train();
  cfg.phase1_epochs = cfg.max_epochs;
  const auto a = train(small_dataset(), cfg);
  REQUIRE(a.epochs.size() == 4);
  CHECK(a.epochs.back().loss_mean < a.epochs.front().loss_mean);
  for (const auto& e : a.epochs) CHECK(e.phase == 1);

  const auto b = train(small_dataset(), cfg);
  CHECK(a.best_epoch == b.best_epoch);
  for (std::size_t i = 0; i < a.epochs.size(); ++i) CHECK(a.epochs[i].to_json() == b.epochs[i].to_json());
  CHECK(a.params.encoder.embedding == b.params.encoder.embedding);
  CHECK(a.params.classifier_bias == b.params.classifier_bias);
}

TEST_CASE("without a phase 2 every variant trains the encoder-only model") {
  auto cfg = small_train();
  cfg.max_epochs = 2;
  cfg.phase1_epochs = 2;
  cfg.variant = Variant::full;
  const auto full = train(small_dataset(), cfg);
  cfg.variant = Variant::encoder_only;
  const auto enc = train(small_dataset(), cfg);
  for (std::size_t i = 0; i < full.epochs.size(); ++i) CHECK(full.epochs[i].loss_sum == enc.epochs[i].loss_sum);
  CHECK(full.params.encoder.projection == enc.params.encoder.projection);
}

TEST_CASE("phase 2 switches on graphs and pseudo-labels") {
  const auto r = train(small_dataset(), small_train());
  REQUIRE(r.epochs.size() == 4);
  CHECK(r.epochs[1].phase == 1);
  CHECK(r.epochs[1].tau == 1.0);
  CHECK(r.epochs[2].phase == 2);
  CHECK(r.epochs[1].semi_positives == 0);
  // Warmup covers the first 20% of phase-2 steps, so tau has settled by the end of epoch 3.
  CHECK(r.epochs[2].tau == doctest::Approx(0.8));
  CHECK(r.epochs[2].semi_positives > 0);
  CHECK(r.graphs.active_channels() == 2);
}

TEST_CASE("phase-1 losses coincide across variants sharing a seed") {
  auto cfg = small_train();
  cfg.variant = Variant::full;
  const auto full = train(small_dataset(), cfg);
  cfg.variant = Variant::no_coo;
  const auto nc = train(small_dataset(), cfg);
  CHECK(full.epochs[0].loss_sum == nc.epochs[0].loss_sum);
  CHECK(full.epochs[1].loss_sum == nc.epochs[1].loss_sum);
}

TEST_CASE("variant names and invalid configurations") {
  for (auto v : {Variant::full, Variant::no_sim, Variant::no_coo, Variant::no_graph, Variant::encoder_only})
    CHECK(parse_variant(to_string(v)) == v);
  CHECK_THROWS_AS(parse_variant("everything"), Error);
  auto cfg = small_train();
  cfg.phase1_epochs = 9;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_train();
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
