#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "support/synth.hpp"
#include "trusthresh/dataset.hpp"
#include "trusthresh/decision_expr.hpp"
#include "trusthresh/errors.hpp"
#include "trusthresh/oracle.hpp"
#include "trusthresh/optimizer.hpp"
#include "trusthresh/surrogate.hpp"

using namespace trusthresh;
using testsupport::Rng;

namespace {

Dataset staircase() {
  Matrix scores(10, 1);
  std::vector<int> labels(10);
  for (int k = 0; k < 10; ++k) {
    scores(k, 0) = 0.1 * (k + 1);
    labels[k] = scores(k, 0) > 0.55 ? 1 : 0;
  }
  return build_dataset({"a"}, std::move(scores), std::move(labels));
}

}  // namespace

TEST_CASE("oracle scans a single subtask exactly") {
  auto ds = staircase();
  auto expr = parse_and_bind("a", ds.subtask_names());
  const auto r = grid_oracle(ds, expr, 101, 1.0, Objective::recall_at_precision);
  CHECK(r.feasible);
  CHECK(r.recall == 1.0);
  CHECK(r.precision == 1.0);
  // thresholds in [0.5, 0.6) all achieve recall 1; the tie-break keeps the
  // smallest grid value
  CHECK(r.thresholds[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.cells_evaluated == 101);
  CHECK(r.grid_size == 101);
}

TEST_CASE("oracle refuses more than three subtasks") {
  Matrix scores(2, 4, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8});
  auto ds = build_dataset({"a", "b", "c", "d"}, std::move(scores), {1, 0});
  auto expr = parse_and_bind("a AND b AND c AND d", ds.subtask_names());
  CHECK_THROWS_AS(grid_oracle(ds, expr, 11, 0.9, Objective::recall_at_precision),
                  TooManySubtasks);
  CHECK_THROWS_AS(grid_oracle(ds, expr, 1, 0.9, Objective::recall_at_precision),
                  TooManySubtasks);
}

TEST_CASE("oracle rejects degenerate grids") {
  auto ds = staircase();
  auto expr = parse_and_bind("a", ds.subtask_names());
  CHECK_THROWS_AS(grid_oracle(ds, expr, 1, 0.9, Objective::recall_at_precision),
                  ConfigError);
}

TEST_CASE("two-point grid enumerates the corners") {
  Rng rng(83);
  Matrix scores(8, 3);
  std::vector<int> labels(8);
  for (std::size_t j = 0; j < 8; ++j) {
    labels[j] = static_cast<int>(j % 2);
    for (std::size_t i = 0; i < 3; ++i) scores(j, i) = rng.uniform(0.05, 0.95);
  }
  auto ds = build_dataset({"a", "b", "c"}, std::move(scores), std::move(labels));
  auto expr = parse_and_bind("a OR b AND c", ds.subtask_names());
  const auto r = grid_oracle(ds, expr, 2, 0.9, Objective::recall_at_precision);
  CHECK(r.cells_evaluated == 8);
  for (double t : r.thresholds) CHECK((t == 0.0 || t == 1.0));
}

TEST_CASE("irrelevant coordinates settle at the smallest grid value") {
  // second column pinned at 0.0: the strict step gives bit 0 at any
  // threshold, so NOT b is constant-true and the lexicographic tie-break
  // must report 0.0 for the unused coordinate
  Matrix scores(6, 2);
  std::vector<int> labels{0, 0, 0, 1, 1, 1};
  for (int j = 0; j < 6; ++j) {
    scores(j, 0) = 0.1 + 0.15 * j;
    scores(j, 1) = 0.0;
  }
  auto ds = build_dataset({"a", "b"}, std::move(scores), std::move(labels));
  auto expr = parse_and_bind("a AND NOT b", ds.subtask_names());
  const auto r = grid_oracle(ds, expr, 11, 0.9, Objective::recall_at_precision);
  CHECK(r.feasible);
  CHECK(r.recall == 1.0);
  CHECK(r.thresholds[1] == 0.0);
}

TEST_CASE("oracle agrees with an independent exhaustive scan") {
  Rng rng(89);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t N = 12;
    Matrix scores(N, 2);
    std::vector<int> labels(N);
    for (std::size_t j = 0; j < N; ++j) {
      labels[j] = rng.bernoulli(0.5);
      scores(j, 0) = rng.uniform();
      scores(j, 1) = rng.uniform();
    }
    labels[0] = 1;
    labels[1] = 0;
    auto ds = build_dataset({"a", "b"}, std::move(scores), std::move(labels));
    auto expr = parse_and_bind(trial % 2 == 0 ? "a AND b" : "a OR b",
                               ds.subtask_names());
    const double target = trial % 3 == 0 ? 1.0 : 0.75;

    const int G = 6;
    bool found = false;
    double best_recall = -1.0;
    std::vector<double> best_thresholds;
    MetricReport best_metrics;
    for (int g0 = 0; g0 < G; ++g0) {
      for (int g1 = 0; g1 < G; ++g1) {
        const std::vector<double> t{g0 / 5.0, g1 / 5.0};
        const auto m = evaluate_thresholds(ds, expr, t);
        if (m.precision >= target && m.recall > best_recall) {
          best_recall = m.recall;
          best_thresholds = t;
          best_metrics = m;
          found = true;
        }
      }
    }

    const auto r = grid_oracle(ds, expr, G, target, Objective::recall_at_precision);
    REQUIRE(r.feasible == found);
    if (found) {
      CHECK(r.recall == best_metrics.recall);
      CHECK(r.precision == best_metrics.precision);
      CHECK(r.thresholds == best_thresholds);
    }
    CHECK(r.cells_evaluated == G * G);
  }
}

TEST_CASE("tautologies leave no feasible cell") {
  Matrix scores(4, 1, {0.2, 0.4, 0.6, 0.8});
  auto ds = build_dataset({"a"}, std::move(scores), {1, 0, 1, 0});
  auto expr = parse_and_bind("a OR NOT a", ds.subtask_names());
  // the decision is constant-true, so precision equals prevalence everywhere
  const auto r = grid_oracle(ds, expr, 21, 0.9, Objective::recall_at_precision);
  CHECK_FALSE(r.feasible);
  CHECK(r.precision == 0.5);
  CHECK(r.recall == 1.0);
  CHECK(r.thresholds[0] == 0.0);  // lexicographic fallback tie-break
}

TEST_CASE("F1 objective picks the F1 argmax") {
  auto ds = build_dataset({"a"}, Matrix(4, 1, {0.1, 0.3, 0.6, 0.9}), {0, 0, 1, 1});
  auto expr = parse_and_bind("a", ds.subtask_names());
  const auto r = grid_oracle(ds, expr, 101, 0.0, Objective::micro_f1);
  CHECK(r.f1 == 1.0);
  CHECK(r.feasible);
  CHECK(r.thresholds[0] == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("multi-label oracle matches the pooled brute force") {
  Rng rng(97);
  const std::size_t N = 10, C = 2;
  Matrix scores(N, C);
  std::vector<int> labels(N * C);
  for (std::size_t s = 0; s < N; ++s) {
    for (std::size_t c = 0; c < C; ++c) {
      labels[s * C + c] = rng.bernoulli(0.4);
      scores(s, c) = rng.uniform();
    }
  }
  auto ds = build_multilabel_dataset({"c0", "c1"}, std::move(scores),
                                     std::move(labels));

  const int G = 11;
  double best_f1 = -1.0;
  std::vector<double> best_t;
  for (int g0 = 0; g0 < G; ++g0) {
    for (int g1 = 0; g1 < G; ++g1) {
      const std::vector<double> t{g0 / 10.0, g1 / 10.0};
      std::int64_t tp = 0, fp = 0, fn = 0;
      for (std::size_t s = 0; s < N; ++s) {
        for (std::size_t c = 0; c < C; ++c) {
          const int pred = hsf(ds.scores()(s, c) - t[c]);
          const int y = ds.label(s, c);
          tp += pred & y;
          fp += pred & (1 - y);
          fn += (1 - pred) & y;
        }
      }
      const double denom = static_cast<double>(2 * tp + fp + fn);
      const double f1 = denom > 0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
      if (f1 > best_f1) {
        best_f1 = f1;
        best_t = t;
      }
    }
  }

  const auto r = grid_oracle_multilabel(ds, G);
  CHECK(r.f1 == best_f1);
  CHECK(r.thresholds == best_t);
  CHECK(r.cells_evaluated == G * G);
  CHECK(r.feasible);
}

TEST_CASE("multi-label oracle respects the class limit") {
  Matrix scores(2, 4, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8});
  auto ds = build_multilabel_dataset({"a", "b", "c", "d"}, std::move(scores),
                                     {1, 0, 1, 0, 0, 1, 0, 1});
  CHECK_THROWS_AS(grid_oracle_multilabel(ds, 11), TooManySubtasks);
}

TEST_CASE("oracle dominates every feasible grid cell near a fitted solution") {
  Rng rng(101);
  for (int trial = 0; trial < 4; ++trial) {
    const std::size_t N = 80;
    Matrix scores(N, 2);
    std::vector<int> labels(N);
    for (std::size_t j = 0; j < N; ++j) {
      labels[j] = rng.bernoulli(0.5);
      for (std::size_t i = 0; i < 2; ++i) {
        scores(j, i) = labels[j] == 1 ? rng.beta(5.0, 2.0) : rng.beta(2.0, 5.0);
      }
    }
    labels[0] = 1;
    labels[1] = 0;
    auto ds = build_dataset({"a", "b"}, std::move(scores), std::move(labels));
    auto expr = parse_and_bind(trial % 2 == 0 ? "a OR b" : "a AND b",
                               ds.subtask_names());

    FitConfig config = FitConfig::for_objective(Objective::recall_at_precision);
    config.target_precision = 0.85;
    config.iterations = 300;
    const auto fitted = fit(ds, expr, config);
    const int G = 101;
    const auto oracle = grid_oracle(ds, expr, G, config.target_precision,
                                    Objective::recall_at_precision);
    // snap the fitted thresholds to the corners of their containing grid box;
    // any feasible corner must be dominated by the oracle's pick
    for (int mask = 0; mask < 4; ++mask) {
      std::vector<double> corner(2);
      for (int i = 0; i < 2; ++i) {
        const double scaled = fitted.thresholds_raw[static_cast<std::size_t>(i)] *
                              static_cast<double>(G - 1);
        double g = (mask >> i) & 1 ? std::ceil(scaled) : std::floor(scaled);
        g = std::min(g, static_cast<double>(G - 1));
        corner[static_cast<std::size_t>(i)] = g / static_cast<double>(G - 1);
      }
      const auto m = evaluate_thresholds(ds, expr, corner);
      if (m.precision >= config.target_precision) {
        REQUIRE(oracle.feasible);
        CHECK(oracle.recall >= m.recall);
      }
    }
  }
}
