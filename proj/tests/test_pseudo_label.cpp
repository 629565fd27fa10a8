#include <doctest.h>

#include <random>

#include "smgcn/pseudo_label.hpp"

using namespace smgcn;

namespace {

MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

}  // namespace

TEST_CASE("semi-labels keep cosines at or above tau") {
  MatrixXd q(2, 2), c(3, 2);
  q << 1, 0, 0, 3;
  c << 2, 0, 0, 1, 0.79, std::sqrt(1 - 0.79 * 0.79);
  const MatrixXd y = semi_labels(q, c, 0.8);
  CHECK(y(0, 0) == doctest::Approx(1.0));
  CHECK(y(0, 1) == 0.0);
  CHECK(y(0, 2) == 0.0);  // 0.79 < 0.8
  CHECK(y(1, 1) == doctest::Approx(1.0));
  CHECK(y(1, 0) == 0.0);
}

TEST_CASE("semi-labels match a direct cosine computation") {
  std::mt19937_64 rng(3);
  const MatrixXd q = random_matrix(2, 4, rng), c = random_matrix(3, 4, rng);
  const MatrixXd y = semi_labels(q, c, 0.05);
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      double dot = 0, nq = 0, nc = 0;
      for (Eigen::Index k = 0; k < 4; ++k) {
        dot += q(i, k) * c(j, k);
        nq += q(i, k) * q(i, k);
        nc += c(j, k) * c(j, k);
      }
      const double s = dot / std::sqrt(nq * nc);
      CHECK(y(i, j) == doctest::Approx(s >= 0.05 ? s : 0.0).epsilon(1e-12));
    }
}

TEST_CASE("raising tau never adds a positive") {
  std::mt19937_64 rng(4);
  const MatrixXd q = random_matrix(30, 6, rng).cwiseAbs(), c = random_matrix(10, 6, rng).cwiseAbs();
  MatrixXd prev = semi_labels(q, c, 0.01);
  for (double tau = 0.05; tau < 1.0; tau += 0.05) {
    const MatrixXd y = semi_labels(q, c, tau);
    for (Eigen::Index i = 0; i < y.size(); ++i)
      if (y.data()[i] != 0.0) CHECK(prev.data()[i] != 0.0);
    prev = y;
  }
}

TEST_CASE("semi-labels ignore positive rescaling of any row") {
  std::mt19937_64 rng(5);
  const MatrixXd q = random_matrix(5, 4, rng), c = random_matrix(6, 4, rng);
  MatrixXd q2 = 2.0 * q, c2 = c;
  c2.row(3) *= 7.5;
  CHECK((semi_labels(q2, c2, 0.3) - semi_labels(q, c, 0.3)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("zero-norm rows are rejected with their index") {
  MatrixXd q = MatrixXd::Ones(3, 2);
  q.row(1).setZero();
  try {
    semi_labels(q, MatrixXd::Ones(2, 2).eval(), 0.5);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
}

TEST_CASE("tau schedule decays linearly then holds") {
  SemiLabelConfig cfg;
  cfg.warmup_steps = 100;
  CHECK(tau_at(0, cfg) == 0.95);
  CHECK(tau_at(50, cfg) == doctest::Approx(0.875));
  CHECK(tau_at(100, cfg) == 0.8);
  CHECK(tau_at(10000, cfg) == 0.8);
  double prev = 1.0;
  for (std::int64_t s = 0; s <= 120; ++s) {
    CHECK(tau_at(s, cfg) <= prev);
    prev = tau_at(s, cfg);
  }
  SemiLabelConfig none;
  CHECK(tau_at(0, none) == 0.8);
  SemiLabelConfig bad;
  bad.tau_final = 0.97;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("fusion adds and clips") {
  MatrixXd click(1, 3), semi(1, 3);
  click << 1, 0, 0;
  semi << 0.9, 0.85, 0;
  const auto f = fuse_labels(click, semi);
  CHECK(f.values(0, 0) == 1.0);
  CHECK(f.values(0, 1) == 0.85);
  CHECK(f.values(0, 2) == 0.0);
  CHECK(f.click_mask(0, 0));
  CHECK_FALSE(f.click_mask(0, 1));
  CHECK((f.values.array() >= click.array()).all());
  CHECK_THROWS_AS(fuse_labels(click, MatrixXd::Zero(2, 3).eval()), ContractError);
}
