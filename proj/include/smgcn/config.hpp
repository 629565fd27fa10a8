#pragma once

#include <string>
#include <vector>

#include "smgcn/corpus.hpp"
#include "smgcn/trainer.hpp"

namespace smgcn {

/// Flat JSON run configuration covering data generation, training,
/// pseudo-labels and graph options. Unknown keys are rejected.
struct RunConfig {
  GeneratorConfig generator;
  TrainConfig train;

  /// Canonical JSON echo with every key present.
  std::string to_json() const;
  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// Known configuration keys, in echo order.
std::vector<std::string> run_config_keys();

}  // namespace smgcn
