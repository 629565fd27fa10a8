#include "smgcn/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace smgcn {

const char* to_string(SweepParam p) {
  switch (p) {
    case SweepParam::tau: return "tau";
    case SweepParam::alpha: return "alpha";
    case SweepParam::l_q: return "l_q";
    case SweepParam::l_c: return "l_c";
  }
  return "?";
}

SweepParam parse_sweep_param(const std::string& name) {
  for (auto p : {SweepParam::tau, SweepParam::alpha, SweepParam::l_q, SweepParam::l_c})
    if (name == to_string(p)) return p;
  throw config_error("unknown sweep parameter '" + name + "' (expected tau|alpha|l_q|l_c)");
}

TrainConfig with_sweep_value(TrainConfig config, SweepParam param, double value) {
  switch (param) {
    case SweepParam::tau:
      config.semi.tau_final = value;
      config.semi.tau_start = std::max(config.semi.tau_start, value);
      break;
    case SweepParam::alpha: config.alpha = value; break;
    case SweepParam::l_q: config.max_query_len = static_cast<int>(std::lround(value)); break;
    case SweepParam::l_c: config.max_category_len = static_cast<int>(std::lround(value)); break;
  }
  config.validate();
  return config;
}

std::vector<SweepRow> run_sweep(const Dataset& dataset, const TrainConfig& config, SweepParam param,
                                const std::vector<double>& values) {
  std::vector<SweepRow> rows;
  const MatrixXd gold = label_matrix(dataset.test, static_cast<Eigen::Index>(dataset.num_categories()));
  const auto flags = dataset.head_flags();
  for (double v : values) {
    SweepRow row;
    row.value = v;
    try {
      const TrainConfig cfg = with_sweep_value(config, param, v);
      const TrainResult model = train(dataset, cfg);
      const MatrixXd scores = score_split(model, dataset, Split::test, cfg);
      EvalOptions opts;
      opts.threshold = cfg.label_threshold;
      row.all = evaluate(scores, gold, flags, opts);
      opts.slice = Slice::tail;
      row.tail = evaluate(scores, gold, flags, opts);
      row.semi_positives = model.epochs.back().semi_positives;
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_tsv(std::ostream& out, SweepParam param, const std::vector<SweepRow>& rows) {
  out << to_string(param)
      << "\tmicro_p\tmicro_r\tmicro_f1\tmacro_p\tmacro_r\tmacro_f1\ttail_macro_f1\ttail_macro_r\tsemi_positives\tstatus\n";
  char buf[512];
  for (const auto& r : rows) {
    if (!r.ok) {
      std::string err = r.error;
      std::replace(err.begin(), err.end(), '\t', ' ');
      std::replace(err.begin(), err.end(), '\n', ' ');
      std::snprintf(buf, sizeof buf, "%g\tNA\tNA\tNA\tNA\tNA\tNA\tNA\tNA\tNA\t", r.value);
      out << buf << "error: " << err << '\n';
      continue;
    }
    std::snprintf(buf, sizeof buf, "%g\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%ld\tok\n", r.value,
                  r.all.micro.precision, r.all.micro.recall, r.all.micro.f1, r.all.macro.precision,
                  r.all.macro.recall, r.all.macro.f1, r.tail.macro.f1, r.tail.macro.recall, r.semi_positives);
    out << buf;
  }
}

}  // namespace smgcn
