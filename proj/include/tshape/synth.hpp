#pragma once

// Synthetic double-peak series: every period carries two Gaussian bumps
// (the second one smaller), plus optional anomalies injected into the test
// region only.

#include "tshape/series.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace tshape {

enum class AnomalyKind {
  shape_convexity,  // second bump replaced by an amplitude-matched flat top
  amp_ratio,        // second bump raised to 0.95 of the first
  spike,            // 1-3 point impulse of 4 signal standard deviations
  level_shift,      // +0.5·peak1 for half a period
};

std::string_view to_string(AnomalyKind k);
AnomalyKind parse_anomaly_kind(std::string_view name);
/// Comma-separated list of kinds.
std::vector<AnomalyKind> parse_anomaly_kinds(std::string_view list);

struct SynthConfig {
  std::size_t period_len = 64;
  std::size_t n_periods = 200;
  double peak1_amp = 1.0;
  double peak2_amp = 0.6;
  double noise_sigma = 0.02;
  std::vector<AnomalyKind> anomaly_kinds{AnomalyKind::shape_convexity, AnomalyKind::amp_ratio};
  std::size_t anomaly_count = 16;
  /// Fraction of periods before the train/test split.
  double train_fraction = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct InjectedAnomaly {
  AnomalyKind kind;
  std::size_t begin;  // first labeled index
  std::size_t end;    // one past the last labeled index
};

struct SynthResult {
  TimeSeries series;
  std::vector<InjectedAnomaly> anomalies;  // sorted by begin
  std::vector<double> clean;               // base signal without noise or anomalies
};

/// Anomalies are placed round-robin over `anomaly_kinds`, at random positions
/// in the test region, separated from each other by at least one clean point.
/// Throws ConfigError when they cannot all be placed.
SynthResult synth_generate_detailed(const SynthConfig& config);
TimeSeries synth_generate(const SynthConfig& config);

}  // namespace tshape
