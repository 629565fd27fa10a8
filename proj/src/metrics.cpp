#include "smgcn/metrics.hpp"

#include <json.hpp>

namespace smgcn {

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

PrecisionRecallF1 from_counts(double tp, double fp, double fn) {
  PrecisionRecallF1 m;
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
  return m;
}

nlohmann::ordered_json prf_json(const PrecisionRecallF1& m) {
  return {{"p", m.precision}, {"r", m.recall}, {"f1", m.f1}};
}

}  // namespace

const char* to_string(Slice slice) {
  switch (slice) {
    case Slice::all: return "all";
    case Slice::head: return "head";
    case Slice::tail: return "tail";
  }
  return "?";
}

Slice parse_slice(const std::string& name) {
  if (name == "all") return Slice::all;
  if (name == "head") return Slice::head;
  if (name == "tail") return Slice::tail;
  throw config_error("unknown slice '" + name + "' (expected all|head|tail)");
}

MatrixXd threshold_scores(const MatrixXd& scores, double threshold) {
  return (scores.array() >= threshold).cast<double>();
}

ConfusionCounts confusion_counts(const MatrixXd& predicted, const MatrixXd& gold) {
  require(predicted.rows() == gold.rows() && predicted.cols() == gold.cols(), "confusion_counts: shape mismatch");
  const auto n = static_cast<std::size_t>(gold.cols());
  ConfusionCounts c{std::vector<long>(n), std::vector<long>(n), std::vector<long>(n)};
  for (Eigen::Index j = 0; j < gold.cols(); ++j) {
    const auto p = predicted.col(j).array() > 0.5;
    const auto g = gold.col(j).array() > 0.5;
    c.true_positive[static_cast<std::size_t>(j)] = (p && g).count();
    c.false_positive[static_cast<std::size_t>(j)] = (p && !g).count();
    c.false_negative[static_cast<std::size_t>(j)] = (!p && g).count();
  }
  return c;
}

MetricReport evaluate(const MatrixXd& scores, const MatrixXd& gold, const std::vector<bool>& head_flags,
                      const EvalOptions& options) {
  if (scores.rows() != gold.rows() || scores.cols() != gold.cols())
    throw ContractError("evaluate: scores and gold shapes differ");
  require(options.threshold > 0.0 && options.threshold < 1.0, "evaluate: threshold must lie in (0, 1)");
  if (options.slice != Slice::all && head_flags.size() != static_cast<std::size_t>(gold.cols()))
    throw ContractError("evaluate: head flags required for head/tail slices");

  const auto counts = confusion_counts(threshold_scores(scores, options.threshold), gold);
  MetricReport report;
  report.slice = options.slice;

  double tp = 0, fp = 0, fn = 0;
  double sum_p = 0, sum_r = 0, sum_f = 0;
  int macro_n = 0;
  for (std::size_t j = 0; j < counts.true_positive.size(); ++j) {
    if (options.slice == Slice::head && !head_flags[j]) continue;
    if (options.slice == Slice::tail && head_flags[j]) continue;
    CategoryMetrics cm;
    cm.category = static_cast<int>(j);
    cm.tp = counts.true_positive[j];
    cm.fp = counts.false_positive[j];
    cm.fn = counts.false_negative[j];
    cm.scores = from_counts(double(cm.tp), double(cm.fp), double(cm.fn));
    tp += double(cm.tp);
    fp += double(cm.fp);
    fn += double(cm.fn);
    if (!(options.exclude_absent && cm.tp + cm.fp + cm.fn == 0)) {
      sum_p += cm.scores.precision;
      sum_r += cm.scores.recall;
      sum_f += cm.scores.f1;
      ++macro_n;
    }
    report.per_category.push_back(cm);
  }
  if (tp + fn == 0.0) {
    report.degenerate = true;
    return report;
  }
  report.micro = from_counts(tp, fp, fn);
  if (macro_n > 0) {
    report.macro.precision = sum_p / macro_n;
    report.macro.recall = sum_r / macro_n;
    report.macro.f1 = sum_f / macro_n;
  }
  return report;
}

std::string MetricReport::to_json(bool include_per_category) const {
  nlohmann::ordered_json j;
  j["slice"] = smgcn::to_string(slice);
  if (degenerate) {
    j["degenerate"] = true;
    return j.dump();
  }
  j["micro"] = prf_json(micro);
  j["macro"] = prf_json(macro);
  if (include_per_category) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : per_category)
      arr.push_back({{"category", c.category}, {"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn},
                     {"p", c.scores.precision}, {"r", c.scores.recall}, {"f1", c.scores.f1}});
    j["per_category"] = std::move(arr);
  }
  return j.dump();
}

}  // namespace smgcn
