#pragma once

// Text checkpoints: a key-value document holding the model configuration and
// every parameter as `param.<path> = <shape> : <values>` with shortest
// round-trip decimals, so save/load is value-exact.

#include "tshape/keyvalue.hpp"
#include "tshape/model.hpp"

#include <filesystem>

namespace tshape {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  TShapeParams params;
  ModelConfig config;
  // z-score statistics of the training region the parameters were fitted on
  double norm_mean = 0.0;
  double norm_stddev = 1.0;
};

void write_model_config(const ModelConfig& config, KeyValueDoc& doc);
/// Reads `model.*` keys present in `doc` on top of `base`.
ModelConfig read_model_config(const KeyValueDoc& doc, ModelConfig base = {});

KeyValueDoc checkpoint_document(const Checkpoint& ck);
Checkpoint checkpoint_from_document(const KeyValueDoc& doc);

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tshape
