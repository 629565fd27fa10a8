#pragma once

#include <algorithm>
#include <cstdint>

#include "smgcn/types.hpp"

namespace smgcn {

/// Threshold schedule for semi-supervised labels: linear decay from
/// `tau_start` to `tau_final` over `warmup_steps`, then constant.
struct SemiLabelConfig {
  double tau_start = 0.95;
  double tau_final = 0.8;
  std::int64_t warmup_steps = 0;

  void validate() const {
    if (!(tau_final > 0.0 && tau_final <= tau_start && tau_start < 1.0))
      throw config_error("semi-label thresholds must satisfy 0 < tau_final <= tau_start < 1");
    if (warmup_steps < 0) throw config_error("warmup_steps must be >= 0");
  }
};

inline double tau_at(std::int64_t step, const SemiLabelConfig& config) {
  require(step >= 0, "tau_at: step must be >= 0");
  if (step >= config.warmup_steps) return config.tau_final;
  const double t = double(step) / double(config.warmup_steps);
  return config.tau_start + t * (config.tau_final - config.tau_start);
}

template <typename Scalar>
Matrix<Scalar> row_normalized(const Matrix<Scalar>& m, const char* what) {
  Matrix<Scalar> unit = m;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Scalar norm = m.row(i).norm();
    if (!(norm > Scalar(0))) throw data_error(std::string(what) + ": zero-norm embedding at row " + std::to_string(i));
    unit.row(i) /= norm;
  }
  return unit;
}

/// Thresholded query-category cosine relevance. The result is a plain value:
/// nothing computed here takes part in differentiation.
template <typename Scalar>
Matrix<Scalar> semi_labels(const Matrix<Scalar>& query_emb, const Matrix<Scalar>& category_emb, Scalar tau) {
  require(tau > Scalar(0) && tau < Scalar(1), "semi_labels: tau must lie in (0, 1)");
  require(query_emb.cols() == category_emb.cols(), "semi_labels: embedding widths differ");
  const Matrix<Scalar> s = row_normalized(query_emb, "semi_labels(query)") *
                           row_normalized(category_emb, "semi_labels(category)").transpose();
  return s.unaryExpr([tau](Scalar v) { return v >= tau ? v : Scalar(0); });
}

template <typename Scalar>
struct FusedLabels {
  Matrix<Scalar> values;                                 // in [0, 1]
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> click_mask;
};

/// y = min(y_click + y_semi, 1).
template <typename Scalar>
FusedLabels<Scalar> fuse_labels(const Matrix<Scalar>& click, const Matrix<Scalar>& semi) {
  if (click.rows() != semi.rows() || click.cols() != semi.cols())
    throw ContractError("fuse_labels: shape mismatch");
  FusedLabels<Scalar> out;
  out.values = (click + semi).cwiseMin(Scalar(1));
  out.click_mask = click.array() > Scalar(0);
  return out;
}

}  // namespace smgcn
