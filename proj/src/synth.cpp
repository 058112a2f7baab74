#include "tshape/synth.hpp"

#include "tshape/errors.hpp"
#include "tshape/keyvalue.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tshape {

std::string_view to_string(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::shape_convexity: return "shape_convexity";
    case AnomalyKind::amp_ratio: return "amp_ratio";
    case AnomalyKind::spike: return "spike";
    case AnomalyKind::level_shift: return "level_shift";
  }
  return "spike";
}

AnomalyKind parse_anomaly_kind(std::string_view name) {
  for (auto k : {AnomalyKind::shape_convexity, AnomalyKind::amp_ratio, AnomalyKind::spike, AnomalyKind::level_shift})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown anomaly kind '" + std::string(name) +
                    "' (expected shape_convexity, amp_ratio, spike or level_shift)");
}

std::vector<AnomalyKind> parse_anomaly_kinds(std::string_view list) {
  std::vector<AnomalyKind> out;
  for (const auto& item : split(list, ','))
    if (!item.empty()) out.push_back(parse_anomaly_kind(item));
  return out;
}

void SynthConfig::validate() const {
  if (period_len < 16) throw ConfigError("period length must be at least 16");
  if (n_periods < 2) throw ConfigError("need at least two periods");
  if (!(peak2_amp < peak1_amp)) throw ConfigError("the second peak must be smaller than the first");
  if (noise_sigma < 0) throw ConfigError("noise sigma must be non-negative");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
  if (anomaly_count > 0 && anomaly_kinds.empty()) throw ConfigError("anomalies requested but no kinds given");
}

namespace {

constexpr double kCenter1 = 0.25;
constexpr double kCenter2 = 0.65;
constexpr double kSupportWidths = 3.0;  // modified support of a bump: center ± 3 widths
constexpr double kAmpRatio = 0.95;

double gaussian(double d, double width) { return std::exp(-0.5 * (d / width) * (d / width)); }

struct Interval {
  std::size_t begin, end;
};

bool collides(const Interval& a, const std::vector<InjectedAnomaly>& placed) {
  // One clean point must separate neighbouring events.
  return std::any_of(placed.begin(), placed.end(),
                     [&](const InjectedAnomaly& b) { return a.begin <= b.end && b.begin <= a.end; });
}

}  // namespace

SynthResult synth_generate_detailed(const SynthConfig& config) {
  config.validate();
  const std::size_t period = config.period_len;
  const std::size_t n = period * config.n_periods;
  const auto train_periods = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::floor(config.train_fraction * static_cast<double>(config.n_periods))), 1,
      config.n_periods - 1);
  const std::size_t split = train_periods * period;
  const double width = static_cast<double>(period) / 16.0;
  const double c1 = kCenter1 * static_cast<double>(period);
  const double c2 = kCenter2 * static_cast<double>(period);

  SynthResult r;
  r.clean.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double phase = static_cast<double>(t % period);
    r.clean[t] = config.peak1_amp * gaussian(phase - c1, width) + config.peak2_amp * gaussian(phase - c2, width);
  }

  std::mt19937_64 rng(config.seed);
  TimeSeries& s = r.series;
  s.values = r.clean;
  s.labels.assign(n, 0);
  s.timestamps.resize(n);
  s.split_index = split;
  for (std::size_t t = 0; t < n; ++t) s.timestamps[t] = static_cast<double>(t);
  if (config.noise_sigma > 0) {
    std::normal_distribution<double> noise(0.0, config.noise_sigma);
    for (auto& v : s.values) v += noise(rng);
  }

  double signal_sd = 0.0;
  {
    double m = 0.0;
    for (std::size_t t = 0; t < period; ++t) m += r.clean[t];
    m /= static_cast<double>(period);
    for (std::size_t t = 0; t < period; ++t) signal_sd += (r.clean[t] - m) * (r.clean[t] - m);
    signal_sd = std::sqrt(signal_sd / static_cast<double>(period));
  }

  const std::size_t test_periods = config.n_periods - train_periods;
  std::uniform_int_distribution<std::size_t> pick_period(train_periods, config.n_periods - 1);
  std::uniform_int_distribution<std::size_t> pick_point(split, n - 1);
  std::uniform_int_distribution<std::size_t> pick_spike_len(1, 3);
  constexpr int kMaxAttempts = 10000;

  for (std::size_t i = 0; i < config.anomaly_count; ++i) {
    const AnomalyKind kind = config.anomaly_kinds[i % config.anomaly_kinds.size()];
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      Interval iv{};
      double bump_center = 0.0;
      std::size_t spike_len = 0;
      switch (kind) {
        case AnomalyKind::shape_convexity:
        case AnomalyKind::amp_ratio: {
          if (test_periods == 0) break;
          bump_center = static_cast<double>(pick_period(rng) * period) + c2;
          iv.begin = static_cast<std::size_t>(std::ceil(bump_center - kSupportWidths * width));
          iv.end = static_cast<std::size_t>(std::floor(bump_center + kSupportWidths * width)) + 1;
          break;
        }
        case AnomalyKind::spike:
          spike_len = pick_spike_len(rng);
          iv.begin = pick_point(rng);
          iv.end = iv.begin + spike_len;
          break;
        case AnomalyKind::level_shift:
          iv.begin = pick_point(rng);
          iv.end = iv.begin + period / 2;
          break;
      }
      if (iv.end <= iv.begin || iv.begin < split || iv.end > n || collides(iv, r.anomalies)) continue;

      for (std::size_t t = iv.begin; t < iv.end; ++t) {
        const double d = static_cast<double>(t) - bump_center;
        switch (kind) {
          case AnomalyKind::shape_convexity: {
            // Quartic plateau that meets the Gaussian tail at the support edge.
            const double edge = gaussian(kSupportWidths * width, width);
            const double u = d / (kSupportWidths * width);
            const double flat = edge + (1.0 - edge) * (1.0 - u * u * u * u);
            s.values[t] += config.peak2_amp * (flat - gaussian(d, width));
            break;
          }
          case AnomalyKind::amp_ratio:
            s.values[t] += (kAmpRatio * config.peak1_amp - config.peak2_amp) * gaussian(d, width);
            break;
          case AnomalyKind::spike: s.values[t] += 4.0 * signal_sd; break;
          case AnomalyKind::level_shift: s.values[t] += 0.5 * config.peak1_amp; break;
        }
        s.labels[t] = 1;
      }
      r.anomalies.push_back({kind, iv.begin, iv.end});
      placed = true;
    }
    if (!placed)
      throw ConfigError("cannot place anomaly " + std::to_string(i + 1) + " of " +
                        std::to_string(config.anomaly_count) + " without overlap in the test region");
  }
  std::sort(r.anomalies.begin(), r.anomalies.end(),
            [](const InjectedAnomaly& a, const InjectedAnomaly& b) { return a.begin < b.begin; });
  return r;
}

TimeSeries synth_generate(const SynthConfig& config) { return synth_generate_detailed(config).series; }

}  // namespace tshape
