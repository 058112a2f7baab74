#include "tshape/config.hpp"

#include "tshape/errors.hpp"

#include <algorithm>
#include <array>

namespace tshape {

namespace {

constexpr std::array kKnownKeys = {
    "seed",
    "model.window", "model.patch", "model.kernel_sizes", "model.channels_per_scale", "model.heads_local",
    "model.heads_global", "model.ablation",
    "train.epochs", "train.batch_size", "train.lr", "train.stride", "train.patience", "train.validation_fraction",
    "train.min_delta", "train.adam_beta1", "train.adam_beta2", "train.adam_eps",
    "synth.period_len", "synth.periods", "synth.peak1_amp", "synth.peak2_amp", "synth.noise_sigma", "synth.kinds",
    "synth.anomalies", "synth.train_fraction",
    "baseline.ar_order", "baseline.subseq_length",
};

std::size_t read_count(const KeyValueDoc& doc, std::string_view key, std::size_t current) {
  const auto v = doc.find(key);
  if (!v) return current;
  try {
    const auto n = parse_int(*v);
    if (n < 0) throw ConfigError(std::string(key) + " must be non-negative");
    return static_cast<std::size_t>(n);
  } catch (const ParseError& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

double read_real(const KeyValueDoc& doc, std::string_view key, double current) {
  const auto v = doc.find(key);
  if (!v) return current;
  try {
    return parse_double(*v);
  } catch (const ParseError& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

std::string kinds_string(const std::vector<AnomalyKind>& kinds) {
  std::string s;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (i) s += ',';
    s += to_string(kinds[i]);
  }
  return s;
}

}  // namespace

void check_config_keys(const KeyValueDoc& doc) {
  for (const auto& [key, value] : doc.entries())
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
      throw ConfigError("unknown configuration key '" + key + "'");
}

TrainConfig read_train_config(const KeyValueDoc& doc, TrainConfig c) {
  c.epochs = read_count(doc, "train.epochs", c.epochs);
  c.batch_size = read_count(doc, "train.batch_size", c.batch_size);
  c.lr = read_real(doc, "train.lr", c.lr);
  c.stride = read_count(doc, "train.stride", c.stride);
  c.early_stop_patience = read_count(doc, "train.patience", c.early_stop_patience);
  c.validation_fraction = read_real(doc, "train.validation_fraction", c.validation_fraction);
  c.min_delta = read_real(doc, "train.min_delta", c.min_delta);
  c.adam_beta1 = read_real(doc, "train.adam_beta1", c.adam_beta1);
  c.adam_beta2 = read_real(doc, "train.adam_beta2", c.adam_beta2);
  c.adam_eps = read_real(doc, "train.adam_eps", c.adam_eps);
  c.seed = read_count(doc, "seed", c.seed);
  return c;
}

void write_train_config(const TrainConfig& c, KeyValueDoc& doc) {
  doc.set_int("train.epochs", static_cast<std::int64_t>(c.epochs));
  doc.set_int("train.batch_size", static_cast<std::int64_t>(c.batch_size));
  doc.set("train.lr", c.lr);
  doc.set_int("train.stride", static_cast<std::int64_t>(c.stride));
  doc.set_int("train.patience", static_cast<std::int64_t>(c.early_stop_patience));
  doc.set("train.validation_fraction", c.validation_fraction);
  doc.set("train.min_delta", c.min_delta);
  doc.set("train.adam_beta1", c.adam_beta1);
  doc.set("train.adam_beta2", c.adam_beta2);
  doc.set("train.adam_eps", c.adam_eps);
}

SynthConfig read_synth_config(const KeyValueDoc& doc, SynthConfig c) {
  c.period_len = read_count(doc, "synth.period_len", c.period_len);
  c.n_periods = read_count(doc, "synth.periods", c.n_periods);
  c.peak1_amp = read_real(doc, "synth.peak1_amp", c.peak1_amp);
  c.peak2_amp = read_real(doc, "synth.peak2_amp", c.peak2_amp);
  c.noise_sigma = read_real(doc, "synth.noise_sigma", c.noise_sigma);
  if (auto v = doc.find("synth.kinds")) c.anomaly_kinds = parse_anomaly_kinds(*v);
  c.anomaly_count = read_count(doc, "synth.anomalies", c.anomaly_count);
  c.train_fraction = read_real(doc, "synth.train_fraction", c.train_fraction);
  c.seed = read_count(doc, "seed", c.seed);
  return c;
}

void write_synth_config(const SynthConfig& c, KeyValueDoc& doc) {
  doc.set_int("synth.period_len", static_cast<std::int64_t>(c.period_len));
  doc.set_int("synth.periods", static_cast<std::int64_t>(c.n_periods));
  doc.set("synth.peak1_amp", c.peak1_amp);
  doc.set("synth.peak2_amp", c.peak2_amp);
  doc.set("synth.noise_sigma", c.noise_sigma);
  doc.set("synth.kinds", kinds_string(c.anomaly_kinds));
  doc.set_int("synth.anomalies", static_cast<std::int64_t>(c.anomaly_count));
  doc.set("synth.train_fraction", c.train_fraction);
}

BaselineConfig read_baseline_config(const KeyValueDoc& doc, BaselineConfig c) {
  c.ar_order = read_count(doc, "baseline.ar_order", c.ar_order);
  c.subseq_length = read_count(doc, "baseline.subseq_length", c.subseq_length);
  return c;
}

void write_baseline_config(const BaselineConfig& c, KeyValueDoc& doc) {
  doc.set_int("baseline.ar_order", static_cast<std::int64_t>(c.ar_order));
  doc.set_int("baseline.subseq_length", static_cast<std::int64_t>(c.subseq_length));
}

}  // namespace tshape
