#pragma once

#include <string>
#include <vector>

#include "smgcn/types.hpp"

namespace smgcn {

enum class Slice { all, head, tail };

const char* to_string(Slice slice);
Slice parse_slice(const std::string& name);

struct ConfusionCounts {
  std::vector<long> true_positive;
  std::vector<long> false_positive;
  std::vector<long> false_negative;
};

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct CategoryMetrics {
  int category = 0;
  long tp = 0, fp = 0, fn = 0;
  PrecisionRecallF1 scores;
};

struct MetricReport {
  Slice slice = Slice::all;
  bool degenerate = false;  // no gold positives within the slice
  PrecisionRecallF1 micro;
  PrecisionRecallF1 macro;
  std::vector<CategoryMetrics> per_category;

  /// {slice, micro:{p,r,f1}, macro:{p,r,f1}[, per_category]}
  std::string to_json(bool include_per_category = false) const;
};

struct EvalOptions {
  double threshold = 0.5;
  Slice slice = Slice::all;
  /// Drop categories with no gold and no predicted occurrences from the
  /// macro average instead of counting them as zero.
  bool exclude_absent = false;
};

/// Binary matrix with 1 wherever score >= threshold.
MatrixXd threshold_scores(const MatrixXd& scores, double threshold);

ConfusionCounts confusion_counts(const MatrixXd& predicted, const MatrixXd& gold);

/// `head_flags` selects the head/tail slices; it may be empty for Slice::all.
MetricReport evaluate(const MatrixXd& scores, const MatrixXd& gold, const std::vector<bool>& head_flags,
                      const EvalOptions& options = {});

}  // namespace smgcn
