#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "smgcn/corpus.hpp"
#include "smgcn/model.hpp"
#include "smgcn/trainer.hpp"

namespace smgcn {

inline constexpr char kCheckpointMagic[8] = {'S', 'M', 'G', 'C', 'N', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to score queries without the training data: the
/// vocabulary, tokenized category texts, GCN options, parameters and the
/// optimizer state.
struct Checkpoint {
  std::string config_json;
  Vocabulary vocabulary;
  std::vector<TokenSequence> category_tokens;
  GcnOptions gcn_options;
  int max_query_len = 16;
  ModelParams params;
  OptimizerState optimizer;
};

Checkpoint make_checkpoint(const TrainResult& model, const TrainConfig& config, std::string config_json);

/// Binary, little-endian reals.
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in, const std::string& source);

/// Writes to a temporary file in the same directory, then renames.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace smgcn
