#include "doctest.h"

#include "tshape/detection.hpp"
#include "tshape/errors.hpp"
#include "tshape/metrics.hpp"

#include <filesystem>
#include <random>

using namespace tshape;
using Labels = std::vector<std::uint8_t>;

namespace {

Labels interval(std::size_t n, std::initializer_list<std::pair<std::size_t, std::size_t>> runs) {
  Labels l(n, 0);
  for (auto [b, e] : runs)
    for (std::size_t i = b; i < e; ++i) l[i] = 1;
  return l;
}

// Brute-force F1 over every candidate threshold, evaluated independently.
double brute_best(const std::vector<double>& scores, const Labels& labels, MetricKind kind) {
  std::vector<double> cands(scores);
  cands.push_back(-1e300);
  double best = 0.0;
  for (double t : cands) {
    const auto pred = binarize(scores, t);
    best = std::max(best, kind == MetricKind::point ? point_f1(pred, labels).f1 : event_f1(pred, labels).f1);
  }
  return best;
}

}  // namespace

TEST_SUITE("binarize") {
  TEST_CASE("strict threshold") {
    const std::vector<double> s{0.1, 0.5, 0.5, 0.9};
    CHECK(binarize(s, 0.9) == Labels{0, 0, 0, 0});
    CHECK(binarize(s, -1.0) == Labels{1, 1, 1, 1});
    CHECK(binarize(s, 0.5) == Labels{0, 0, 0, 1});
  }

  TEST_CASE("raising the threshold never adds positives") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> s(200);
    for (auto& x : s) x = u(rng);
    for (int trial = 0; trial < 50; ++trial) {
      double a = u(rng), b = u(rng);
      if (a > b) std::swap(a, b);
      const auto lo = binarize(s, a), hi = binarize(s, b);
      for (std::size_t i = 0; i < s.size(); ++i) CHECK(hi[i] <= lo[i]);
    }
  }
}

TEST_SUITE("point F1") {
  TEST_CASE("fixtures") {
    const Labels labels{0, 1, 1, 0};
    auto r = point_f1(labels, labels);
    CHECK(r.f1 == 1.0);
    r = point_f1(Labels{0, 0, 0, 0}, labels);
    CHECK(r.f1 == 0.0);
    r = point_f1(Labels{0, 1, 0, 1}, labels);
    CHECK(r.tp == 1);
    CHECK(r.fp == 1);
    CHECK(r.fn == 1);
    CHECK(r.precision == 0.5);
    CHECK(r.recall == 0.5);
    CHECK(r.f1 == 0.5);
  }

  TEST_CASE("0/0 convention and length mismatch") {
    const auto r = point_f1(Labels{0, 0}, Labels{0, 0});
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.f1 == 0.0);
    CHECK_THROWS_AS(point_f1(Labels{0, 0}, Labels{0}), DimensionError);
  }
}

TEST_SUITE("events") {
  TEST_CASE("extract_events") {
    CHECK(extract_events(Labels{0, 1, 1, 0, 1}) == std::vector<Event>{{1, 3}, {4, 5}});
    CHECK(extract_events(Labels{0, 0, 0}).empty());
    CHECK(extract_events(Labels{1, 1}) == std::vector<Event>{{0, 2}});
  }

  TEST_CASE("concatenation with a separating zero unions the shifted events") {
    std::mt19937_64 rng(2);
    std::bernoulli_distribution b(0.4);
    for (int trial = 0; trial < 100; ++trial) {
      Labels a(1 + rng() % 30), c(1 + rng() % 30);
      for (auto& x : a) x = b(rng);
      for (auto& x : c) x = b(rng);
      Labels joined(a);
      joined.push_back(0);
      joined.insert(joined.end(), c.begin(), c.end());
      auto want = extract_events(a);
      for (auto e : extract_events(c)) want.push_back({e.begin + a.size() + 1, e.end + a.size() + 1});
      CHECK(extract_events(joined) == want);
    }
  }

  TEST_CASE("event F1 fixtures") {
    const auto gt = interval(60, {{10, 20}});
    auto r = event_f1(interval(60, {{15, 16}}), gt);
    CHECK(r.tp == 1);
    CHECK(r.fp == 0);
    CHECK(r.fn == 0);
    CHECK(r.f1 == 1.0);

    r = event_f1(interval(60, {{15, 16}, {50, 51}}), gt);
    CHECK(r.tp == 1);
    CHECK(r.fp == 1);
    CHECK(r.fn == 0);
    CHECK(r.precision == 0.5);
    CHECK(r.recall == 1.0);
    CHECK(r.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    const auto two = interval(60, {{10, 20}, {30, 40}});
    r = event_f1(interval(60, {{10, 20}}), two);
    CHECK(r.tp == 1);
    CHECK(r.fn == 1);
    CHECK(r.fp == 0);
    CHECK(r.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  }

  TEST_CASE("predictions spilling past an event pay for the spill") {
    const auto gt = interval(30, {{10, 20}});
    const auto r = event_f1(interval(30, {{5, 25}}), gt);
    CHECK(r.tp == 1);
    CHECK(r.fp == 2);
    const auto all = event_f1(Labels(30, 1), gt);
    CHECK(all.f1 < 1.0);
  }

  TEST_CASE("F1 reaches 1 iff every event is hit and nothing strays") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      Labels gt(40), pred(40);
      for (auto& x : gt) x = rng() % 4 == 0;
      for (auto& x : pred) x = rng() % 3 == 0;
      const auto r = event_f1(pred, gt);
      bool stray = false;
      for (std::size_t i = 0; i < 40; ++i) stray |= pred[i] && !gt[i];
      bool all_hit = true;
      for (auto e : extract_events(gt)) {
        bool hit = false;
        for (std::size_t i = e.begin; i < e.end; ++i) hit |= pred[i] != 0;
        all_hit &= hit;
      }
      const bool any_gt = !extract_events(gt).empty();
      CHECK((r.f1 == 1.0) == (any_gt && all_hit && !stray));
      CHECK(r.f1 <= 1.0);
      const auto p = point_f1(pred, gt);
      CHECK((p.f1 == 1.0) == (any_gt && pred == gt));
    }
  }

  TEST_CASE("dilating a ground-truth event leaves TP and FN unchanged") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 200;
      const std::size_t b = 20 + rng() % 100, len = 1 + rng() % 20;
      const std::size_t hit = b + rng() % len;
      const auto gt = interval(n, {{b, b + len}, {180, 185}});
      Labels pred(n, 0);
      pred[hit] = 1;
      const auto base = event_f1(pred, gt);
      const std::size_t grow_left = rng() % 15, grow_right = rng() % 15;
      const auto dilated = interval(n, {{b - grow_left, b + len + grow_right}, {180, 185}});
      const auto r = event_f1(pred, dilated);
      CHECK(r.tp == base.tp);
      CHECK(r.fn == base.fn);
      CHECK(r.tp == 1);
      CHECK(r.fn == 1);
    }
  }

  TEST_CASE("length mismatch") { CHECK_THROWS_AS(event_f1(Labels{0}, Labels{0, 1}), DimensionError); }
}

TEST_SUITE("best-F1 sweep") {
  TEST_CASE("scores equal to labels give F1 1 with a threshold in [0, 1)") {
    const auto labels = interval(50, {{5, 9}, {20, 30}});
    const std::vector<double> scores(labels.begin(), labels.end());
    for (auto kind : {MetricKind::point, MetricKind::event}) {
      const auto r = best_f1_sweep(scores, labels, kind);
      CHECK(r.best.f1 == 1.0);
      CHECK(r.threshold >= 0.0);
      CHECK(r.threshold < 1.0);
    }
  }

  TEST_CASE("matches a brute-force sweep and dominates any fixed threshold") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0, 1);
    for (int trial = 0; trial < 30; ++trial) {
      Labels labels(120, 0);
      for (int e = 0; e < 4; ++e) {
        const std::size_t b = rng() % 110;
        for (std::size_t i = b; i < b + 1 + rng() % 8 && i < 120; ++i) labels[i] = 1;
      }
      std::vector<double> scores(120);
      for (std::size_t i = 0; i < 120; ++i) scores[i] = std::round(4 * (n(rng) + labels[i])) / 4;
      for (auto kind : {MetricKind::point, MetricKind::event}) {
        const auto r = best_f1_sweep(scores, labels, kind, 1 + trial % 3);
        CHECK(r.best.f1 == brute_best(scores, labels, kind));
        const auto at = binarize(scores, r.threshold);
        const double f = kind == MetricKind::point ? point_f1(at, labels).f1 : event_f1(at, labels).f1;
        CHECK(f == r.best.f1);
        for (double t : {-0.5, 0.0, 0.5, 1.0})
          CHECK(r.best.f1 >= (kind == MetricKind::point ? point_f1(binarize(scores, t), labels).f1
                                                        : event_f1(binarize(scores, t), labels).f1));
        // No smaller candidate reaches the same F1.
        for (double s : scores)
          if (s < r.threshold) {
            const auto p = binarize(scores, s);
            CHECK((kind == MetricKind::point ? point_f1(p, labels).f1 : event_f1(p, labels).f1) < r.best.f1);
          }
      }
    }
  }

  TEST_CASE("both extreme predictions are reachable") {
    const std::vector<double> scores{3, 1, 2};
    CHECK(best_f1_sweep(scores, Labels{1, 1, 1}, MetricKind::point).best.f1 == 1.0);
    const auto r = best_f1_sweep(scores, Labels{0, 0, 0}, MetricKind::point);
    CHECK(r.best.f1 == 0.0);
  }

  TEST_CASE("invariant under strictly monotone transforms") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
      Labels labels(300);
      std::vector<double> s(300), t(300);
      for (std::size_t i = 0; i < 300; ++i) {
        labels[i] = u(rng) < 0.1;
        s[i] = u(rng) + 0.5 * labels[i];
        t[i] = std::exp(3 * s[i]) - 7;
      }
      for (auto kind : {MetricKind::point, MetricKind::event})
        CHECK(best_f1_sweep(s, labels, kind).best.f1 == best_f1_sweep(t, labels, kind).best.f1);
    }
  }

  TEST_CASE("random scores stay below 0.35 point-F1 at a 10% label rate") {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(0, 1);
      Labels labels(2000);
      std::vector<double> s(2000);
      for (std::size_t i = 0; i < 2000; ++i) {
        labels[i] = u(rng) < 0.1;
        s[i] = u(rng);
      }
      worst = std::max(worst, best_f1_sweep(s, labels, MetricKind::point).best.f1);
    }
    MESSAGE("worst random best point-F1 over 20 seeds: ", worst);
    CHECK(worst < 0.35);
  }

  TEST_CASE("evaluate reports recompute their F1") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0, 1);
    Labels labels(500);
    std::vector<double> s(500);
    for (std::size_t i = 0; i < 500; ++i) {
      labels[i] = (i / 25) % 5 == 0;
      s[i] = u(rng) + 0.4 * labels[i];
    }
    const auto r = evaluate(s, labels, 2);
    for (const auto* prf : {&r.point.best, &r.event.best}) {
      const double f = 2 * prf->precision * prf->recall / (prf->precision + prf->recall);
      CHECK(std::abs(f - prf->f1) < 1e-12);
      CHECK(prf->precision == doctest::Approx(double(prf->tp) / double(prf->tp + prf->fp)).epsilon(1e-15));
    }
  }
}

TEST_SUITE("score series files") {
  TEST_CASE("CSV round trip") {
    const auto path = std::filesystem::temp_directory_path() / "tshape_scores_roundtrip.csv";
    const auto s = make_score_series({0.5, 1e-300, 3.25, 0.0}, 100, 16);
    write_scores_csv(s, path);
    const auto back = load_scores_csv(path);
    CHECK(back.scores == s.scores);
    CHECK(back.first_index == 100);
  }
}
