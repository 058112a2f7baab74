#include "tshape/metrics.hpp"

#include "tshape/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <thread>

namespace tshape {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw DimensionError(std::string(what) + ": length mismatch " + std::to_string(a) + " vs " + std::to_string(b));
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

PRF make_prf(std::size_t tp, std::size_t fp, std::size_t fn) {
  PRF r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.precision = ratio(tp, tp + fp);
  r.recall = ratio(tp, tp + fn);
  const double s = r.precision + r.recall;
  r.f1 = s > 0 ? 2.0 * r.precision * r.recall / s : 0.0;
  return r;
}

std::vector<std::uint8_t> binarize(std::span<const double> scores, double threshold) {
  std::vector<std::uint8_t> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > threshold ? 1 : 0;
  return out;
}

PRF point_f1(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> labels) {
  require_same_length(pred.size(), labels.size(), "point_f1");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] && labels[i]) ++tp;
    else if (pred[i]) ++fp;
    else if (labels[i]) ++fn;
  }
  return make_prf(tp, fp, fn);
}

std::vector<Event> extract_events(std::span<const std::uint8_t> binary) {
  std::vector<Event> out;
  std::size_t i = 0;
  while (i < binary.size()) {
    if (!binary[i]) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    while (i < binary.size() && binary[i]) ++i;
    out.push_back({begin, i});
  }
  return out;
}

namespace {

bool any_set(std::span<const std::uint8_t> v, const Event& e) {
  for (std::size_t i = e.begin; i < e.end; ++i)
    if (v[i]) return true;
  return false;
}

}  // namespace

PRF event_f1(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> labels) {
  require_same_length(pred.size(), labels.size(), "event_f1");
  std::size_t tp = 0, fn = 0, fp = 0;
  for (const auto& e : extract_events(labels)) (any_set(pred, e) ? tp : fn) += 1;
  // Stray detections: maximal predicted runs once ground-truth points are masked out.
  bool in_run = false;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool stray = pred[i] && !labels[i];
    if (stray && !in_run) ++fp;
    in_run = stray;
  }
  return make_prf(tp, fp, fn);
}

namespace {

std::vector<double> candidate_thresholds(std::span<const double> scores) {
  std::vector<double> c(scores.begin(), scores.end());
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  if (!c.empty()) c.insert(c.begin(), std::nextafter(c.front(), -std::numeric_limits<double>::infinity()));
  return c;
}

SweepResult sweep_point(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::size_t total_pos = 0;
  for (auto l : labels) total_pos += l;

  SweepResult best;
  bool have = false;
  auto consider = [&](double threshold, std::size_t below, std::size_t pos_below) {
    // Predicted positive: the n - below points with score > threshold.
    const std::size_t tp = total_pos - pos_below;
    const std::size_t fp = (n - below) - tp;
    const PRF r = make_prf(tp, fp, total_pos - tp);
    if (!have || r.f1 > best.best.f1) {
      best = {r, threshold};
      have = true;
    }
  };
  if (n == 0) return best;
  consider(std::nextafter(scores[order[0]], -std::numeric_limits<double>::infinity()), 0, 0);
  std::size_t pos_below = 0;
  for (std::size_t i = 0; i < n; ++i) {
    pos_below += labels[order[i]];
    if (i + 1 < n && scores[order[i + 1]] == scores[order[i]]) continue;
    consider(scores[order[i]], i + 1, pos_below);
  }
  return best;
}

SweepResult sweep_event_range(std::span<const double> scores, std::span<const std::uint8_t> labels,
                              std::span<const double> thresholds) {
  SweepResult best;
  bool have = false;
  for (double th : thresholds) {
    const PRF r = event_f1(binarize(scores, th), labels);
    if (!have || r.f1 > best.best.f1) {
      best = {r, th};
      have = true;
    }
  }
  return best;
}

}  // namespace

SweepResult best_f1_sweep(std::span<const double> scores, std::span<const std::uint8_t> labels, MetricKind metric,
                          unsigned threads) {
  require_same_length(scores.size(), labels.size(), "best_f1_sweep");
  for (double s : scores)
    if (!std::isfinite(s)) throw NumericError("best_f1_sweep: non-finite score");
  if (metric == MetricKind::point) return sweep_point(scores, labels);

  const auto thresholds = candidate_thresholds(scores);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(thresholds.size() / 64 + 1)));
  if (threads == 1) return sweep_event_range(scores, labels, thresholds);

  std::vector<SweepResult> partial(threads);
  std::vector<std::thread> pool;
  const std::size_t chunk = (thresholds.size() + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t lo = std::min(thresholds.size(), w * chunk);
    const std::size_t hi = std::min(thresholds.size(), lo + chunk);
    pool.emplace_back([&, w, lo, hi] {
      partial[w] = sweep_event_range(scores, labels, std::span<const double>(thresholds).subspan(lo, hi - lo));
    });
  }
  for (auto& t : pool) t.join();
  // Chunks are in ascending threshold order, so strict improvement keeps the smallest threshold.
  SweepResult best = partial[0];
  for (unsigned w = 1; w < threads; ++w)
    if (partial[w].best.f1 > best.best.f1) best = partial[w];
  return best;
}

EvalReport evaluate(std::span<const double> scores, std::span<const std::uint8_t> labels, unsigned threads) {
  return {best_f1_sweep(scores, labels, MetricKind::point, threads),
          best_f1_sweep(scores, labels, MetricKind::event, threads)};
}

unsigned thread_budget() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TSHAPE_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(std::min<long>(v, 1024));
  }
  return hw;
}

}  // namespace tshape
