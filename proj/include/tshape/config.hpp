#pragma once

// Key-value configuration documents. Sections are key prefixes:
// `model.*`, `train.*`, `synth.*`, `baseline.*`, plus a top-level `seed`.

#include "tshape/keyvalue.hpp"
#include "tshape/synth.hpp"
#include "tshape/training.hpp"

namespace tshape {

struct BaselineConfig {
  std::size_t ar_order = 16;
  std::size_t subseq_length = 32;
};

/// Throws ConfigError naming the first key that no reader understands.
void check_config_keys(const KeyValueDoc& doc);

TrainConfig read_train_config(const KeyValueDoc& doc, TrainConfig base = {});
void write_train_config(const TrainConfig& config, KeyValueDoc& doc);

SynthConfig read_synth_config(const KeyValueDoc& doc, SynthConfig base = {});
void write_synth_config(const SynthConfig& config, KeyValueDoc& doc);

BaselineConfig read_baseline_config(const KeyValueDoc& doc, BaselineConfig base = {});
void write_baseline_config(const BaselineConfig& config, KeyValueDoc& doc);

}  // namespace tshape
