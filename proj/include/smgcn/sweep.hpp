#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "smgcn/trainer.hpp"

namespace smgcn {

enum class SweepParam { tau, alpha, l_q, l_c };

const char* to_string(SweepParam p);
SweepParam parse_sweep_param(const std::string& name);

/// Applies one swept value to a training configuration.
TrainConfig with_sweep_value(TrainConfig config, SweepParam param, double value);

struct SweepRow {
  double value = 0.0;
  bool ok = false;
  std::string error;
  MetricReport all;
  MetricReport tail;
  long semi_positives = 0;  // pseudo-label positives over the final epoch
};

/// One training run per value, all with the same seed. A failed run is
/// recorded and the sweep continues.
std::vector<SweepRow> run_sweep(const Dataset& dataset, const TrainConfig& config, SweepParam param,
                                const std::vector<double>& values);

void write_sweep_tsv(std::ostream& out, SweepParam param, const std::vector<SweepRow>& rows);

}  // namespace smgcn
