#include <doctest.h>

#include <random>

#include "smgcn/gcn.hpp"
#include "smgcn/label_graph.hpp"

using namespace smgcn;

namespace {

MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

ChannelGraphs<double> random_graphs(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  MatrixXd a = MatrixXd::Zero(n, n), b = MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) {
        if (uni(rng) < 0.5) a(i, j) = uni(rng);
        if (uni(rng) < 0.5) b(i, j) = b(j, i) = uni(rng);
      }
  return fuse(normalize(RawAdjacency<double>{a}), normalize(RawAdjacency<double>{b}));
}

double lrelu(double x) { return x > 0 ? x : 0.01 * x; }

}  // namespace

TEST_CASE("identity graphs with identity weights apply only the activation") {
  auto p = GcnParams<double>::zeros({3, 3}, ChannelMerge::mean);
  for (auto& w : p.weights[0]) w = MatrixXd::Identity(3, 3);
  MatrixXd h0(2, 3);
  h0 << 1, -2, 0.5, -1, 3, 0;
  GcnOptions opts;
  opts.final_activation = true;
  const auto act = gcn_forward(p, ChannelGraphs<double>::identity(2), h0, opts);
  CHECK(act.output() == h0.unaryExpr([](double x) { return lrelu(x); }));
}

TEST_CASE("zero input stays zero") {
  std::mt19937_64 rng(1);
  const auto p = GcnParams<double>::random({4, 4, 4}, ChannelMerge::mean, rng);
  const auto g = random_graphs(5, rng);
  CHECK(gcn_forward(p, g, MatrixXd(MatrixXd::Zero(5, 4))).output().isZero());
}

TEST_CASE("three-node layer matches hand-written matrix arithmetic") {
  MatrixXd a(3, 3), s(3, 3);
  a << 0, 1, 0, 0.5, 0, 0, 0, 0, 0;
  s << 0, 0, 0.8, 0, 0, 0, 0.8, 0, 0;
  const auto g = fuse(normalize(RawAdjacency<double>{a}), normalize(RawAdjacency<double>{s}));
  auto p = GcnParams<double>::zeros({2, 2}, ChannelMerge::mean);
  p.weights[0][0] << 1, 2, -1, 0.5;
  p.weights[0][1] << 0.3, -0.4, 1.5, 1;
  MatrixXd h0(3, 2);
  h0 << 1, 0, -1, 2, 0.5, 0.5;
  GcnOptions opts;
  opts.final_activation = true;
  const MatrixXd got = gcn_forward(p, g, h0, opts).output();

  // A' = A + I; d = row sums; entries A'_ij / sqrt(d_i d_j).
  auto norm = [](const MatrixXd& m) {
    MatrixXd x = m + MatrixXd::Identity(3, 3);
    MatrixXd out(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out(i, j) = x(i, j) / std::sqrt(x.row(i).sum() * x.row(j).sum());
    return out;
  };
  const MatrixXd pre = 0.5 * (norm(a) * h0 * p.weights[0][0] + norm(s) * h0 * p.weights[0][1]);
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(got.data()[i] == doctest::Approx(lrelu(pre.data()[i])).epsilon(1e-14));
}

TEST_CASE("GCN gradients match central finite differences") {
  for (auto merge : {ChannelMerge::mean, ChannelMerge::sum, ChannelMerge::concat_project}) {
    for (bool final_act : {true, false}) {
      std::mt19937_64 rng(5);
      auto p = GcnParams<double>::random({4, 4, 4}, merge, rng);
      for (auto& proj : p.projection)
        if (proj.size()) proj += random_matrix(proj.rows(), proj.cols(), rng, 0.3);
      const auto g = random_graphs(4, rng);
      const MatrixXd h0 = random_matrix(4, 4, rng);
      const MatrixXd og = random_matrix(4, 4, rng);
      GcnOptions opts;
      opts.merge = merge;
      opts.final_activation = final_act;

      auto loss = [&](const GcnParams<double>& q, const MatrixXd& h) {
        return gcn_forward(q, g, h, opts).output().cwiseProduct(og).sum();
      };
      const auto back = gcn_backward(p, g, gcn_forward(p, g, h0, opts), og, opts);
      const double step = 1e-5;
      auto check = [&](const MatrixXd& analytic, auto&& perturb) {
        MatrixXd numeric(analytic.rows(), analytic.cols());
        for (Eigen::Index i = 0; i < analytic.rows(); ++i)
          for (Eigen::Index j = 0; j < analytic.cols(); ++j)
            numeric(i, j) = (perturb(i, j, step) - perturb(i, j, -step)) / (2 * step);
        const double scale = std::max({analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), 1e-12});
        CHECK((analytic - numeric).cwiseAbs().maxCoeff() / scale < 1e-4);
      };
      for (std::size_t l = 0; l < 2; ++l) {
        for (std::size_t c = 0; c < 2; ++c)
          check(back.grads.weights[l][c], [&](Eigen::Index i, Eigen::Index j, double d) {
            auto q = p;
            q.weights[l][c](i, j) += d;
            return loss(q, h0);
          });
        if (merge == ChannelMerge::concat_project)
          check(back.grads.projection[l], [&](Eigen::Index i, Eigen::Index j, double d) {
            auto q = p;
            q.projection[l](i, j) += d;
            return loss(q, h0);
          });
      }
      check(back.input_grad, [&](Eigen::Index i, Eigen::Index j, double d) {
        MatrixXd h = h0;
        h(i, j) += d;
        return loss(p, h);
      });
    }
  }
}

TEST_CASE("zero output gradient gives zero gradients") {
  std::mt19937_64 rng(2);
  const auto p = GcnParams<double>::random({3, 3, 3}, ChannelMerge::mean, rng);
  const auto g = random_graphs(4, rng);
  const MatrixXd h0 = random_matrix(4, 3, rng);
  const auto back = gcn_backward(p, g, gcn_forward(p, g, h0), MatrixXd(MatrixXd::Zero(4, 3)));
  CHECK(back.input_grad.isZero());
  for (const auto& layer : back.grads.weights)
    for (const auto& w : layer) CHECK(w.isZero());
}

TEST_CASE("an isolated node only receives its own output gradient") {
  MatrixXd a = MatrixXd::Zero(3, 3);
  a(0, 1) = a(1, 0) = 1.0;  // node 2 isolated
  const auto adj = normalize(RawAdjacency<double>{a});
  const auto g = fuse(adj, adj);
  std::mt19937_64 rng(4);
  const auto p = GcnParams<double>::random({3, 3, 3}, ChannelMerge::mean, rng);
  const MatrixXd h0 = random_matrix(3, 3, rng);
  const auto act = gcn_forward(p, g, h0);

  MatrixXd og = MatrixXd::Zero(3, 3);
  og.row(0) = random_matrix(1, 3, rng);
  CHECK(gcn_backward(p, g, act, og).input_grad.row(2).isZero());

  MatrixXd og2 = MatrixXd::Zero(3, 3);
  og2.row(2) = random_matrix(1, 3, rng);
  const MatrixXd ig = gcn_backward(p, g, act, og2).input_grad;
  CHECK(ig.topRows(2).isZero());
  CHECK_FALSE(ig.row(2).isZero());
}

TEST_CASE("relabeling categories permutes the output rows") {
  std::mt19937_64 rng(8);
  const auto p = GcnParams<double>::random({3, 5, 3}, ChannelMerge::mean, rng);
  const Eigen::Index n = 6;
  const auto g = random_graphs(n, rng);
  const MatrixXd h0 = random_matrix(n, 3, rng);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(n);
  perm.indices() << 3, 0, 5, 1, 4, 2;
  const MatrixXd pm = perm.toDenseMatrix().cast<double>();
  const auto pg = fuse(Adjacency<double>::dense(pm * g[Channel::coo]->to_dense() * pm.transpose()),
                       Adjacency<double>::dense(pm * g[Channel::sim]->to_dense() * pm.transpose()));
  const MatrixXd out = gcn_forward(p, g, h0).output();
  const MatrixXd out_p = gcn_forward(p, pg, MatrixXd(pm * h0)).output();
  CHECK((out_p - pm * out).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("a head-only gradient reaches a tail node through an edge") {
  // Categories: 0 head, 1 tail linked to 0, 2 unrelated.
  MatrixXd s = MatrixXd::Zero(3, 3);
  s(0, 1) = s(1, 0) = 0.9;
  const auto sim = normalize(RawAdjacency<double>{s});
  const auto g = fuse(Adjacency<double>::identity(3), sim);
  std::mt19937_64 rng(10);
  const auto p = GcnParams<double>::random({4, 4, 4}, ChannelMerge::mean, rng);
  const MatrixXd h0 = random_matrix(3, 4, rng);
  MatrixXd og = MatrixXd::Zero(3, 4);
  og.row(0) = random_matrix(1, 4, rng);
  const auto back = gcn_backward(p, g, gcn_forward(p, g, h0), og);
  CHECK(back.input_grad.row(1).norm() > 0.0);
  CHECK(back.input_grad.row(2).isZero());

  const auto no_edge = gcn_backward(p, ChannelGraphs<double>::identity(3),
                                    gcn_forward(p, ChannelGraphs<double>::identity(3), h0), og);
  CHECK(no_edge.input_grad.row(1).isZero());
}

TEST_CASE("forward is repeatable and rejects bad shapes") {
  std::mt19937_64 rng(12);
  const auto p = GcnParams<double>::random({3, 3}, ChannelMerge::mean, rng);
  const auto g = random_graphs(4, rng);
  const MatrixXd h0 = random_matrix(4, 3, rng);
  CHECK(gcn_forward(p, g, h0).output() == gcn_forward(p, g, h0).output());
  CHECK_THROWS_AS(gcn_forward(p, g, MatrixXd(MatrixXd::Zero(4, 2))), ContractError);
  CHECK_THROWS_AS(gcn_forward(p, g, MatrixXd(MatrixXd::Zero(5, 3))), ContractError);
  CHECK_THROWS_AS(gcn_forward(p, ChannelGraphs<double>{}, h0), ContractError);
}
