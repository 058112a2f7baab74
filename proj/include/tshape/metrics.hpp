#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tshape {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

/// F1 = 2PR/(P+R) with 0/0 taken as 0; same convention for P and R.
PRF make_prf(std::size_t tp, std::size_t fp, std::size_t fn);

/// pred_t = 1 iff score_t > threshold.
std::vector<std::uint8_t> binarize(std::span<const double> scores, double threshold);

PRF point_f1(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> labels);

struct Event {
  std::size_t begin;  // inclusive
  std::size_t end;    // exclusive
  bool operator==(const Event&) const = default;
};

/// Maximal runs of ones, sorted.
std::vector<Event> extract_events(std::span<const std::uint8_t> binary);

/// Event-level counts: a ground-truth event is a true positive when any of
/// its points is predicted. False positives are the maximal runs of
/// predicted points lying outside every ground-truth event, so a prediction
/// that spills past an event still pays for the spill.
PRF event_f1(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> labels);

enum class MetricKind { point, event };

struct SweepResult {
  PRF best;
  double threshold = 0.0;  // smallest threshold achieving best.f1
};

/// Evaluates every threshold in {just below min score} ∪ {distinct scores}
/// and keeps the best F1. `threads` > 1 splits the candidate list.
SweepResult best_f1_sweep(std::span<const double> scores, std::span<const std::uint8_t> labels, MetricKind metric,
                          unsigned threads = 1);

struct EvalReport {
  SweepResult point;
  SweepResult event;
};

EvalReport evaluate(std::span<const double> scores, std::span<const std::uint8_t> labels, unsigned threads = 1);

/// Threads allowed by TSHAPE_THREADS (default: hardware concurrency, at least 1).
unsigned thread_budget();

}  // namespace tshape
