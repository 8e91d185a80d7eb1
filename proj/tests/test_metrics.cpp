#include <vector>

#include "doctest.h"
#include "support/finite_diff.hpp"
#include "support/synth.hpp"
#include "trusthresh/errors.hpp"
#include "trusthresh/metrics.hpp"

using namespace trusthresh;
using testsupport::Rng;

TEST_CASE("confusion counts and ratios") {
  const std::vector<int> y{1, 1, 0};
  const std::vector<int> yhat{1, 0, 1};
  const auto r = compute_metrics(y, yhat);
  CHECK(r.tp == 1);
  CHECK(r.fp == 1);
  CHECK(r.fn == 1);
  CHECK(r.tn == 0);
  CHECK(r.precision == 0.5);
  CHECK(r.recall == 0.5);
  CHECK(r.f1 == doctest::Approx(0.5));
}

TEST_CASE("degenerate conventions") {
  // no predicted positives: precision vacuously 1
  const auto empty_pred = compute_metrics(std::vector<int>{1, 0}, std::vector<int>{0, 0});
  CHECK(empty_pred.precision == 1.0);
  CHECK(empty_pred.recall == 0.0);
  CHECK(empty_pred.f1 == 0.0);

  // no positives at all: recall 0, f1 0
  const auto no_pos = compute_metrics(std::vector<int>{0, 0}, std::vector<int>{0, 0});
  CHECK(no_pos.precision == 1.0);
  CHECK(no_pos.recall == 0.0);
  CHECK(no_pos.f1 == 0.0);

  // perfect prediction
  const auto perfect = compute_metrics(std::vector<int>{1, 0, 1}, std::vector<int>{1, 0, 1});
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);
}

TEST_CASE("counts partition the samples") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 50));
    std::vector<int> y(n), yhat(n);
    for (std::size_t j = 0; j < n; ++j) {
      y[j] = rng.bernoulli(0.4);
      yhat[j] = rng.bernoulli(0.5);
    }
    const auto r = compute_metrics(y, yhat);
    CHECK(static_cast<std::size_t>(r.tp + r.fp + r.fn + r.tn) == n);
    if (r.tp + r.fp > 0) CHECK(r.precision * (r.tp + r.fp) == doctest::Approx(r.tp));
  }
}

TEST_CASE("length mismatch is rejected") {
  CHECK_THROWS_AS(compute_metrics(std::vector<int>{1}, std::vector<int>{1, 0}),
                  LengthMismatch);
  std::vector<double> out(1);
  CHECK_THROWS_AS(
      metric_partials(std::vector<int>{1, 0}, std::vector<double>{1.0}, MetricKind::recall, out),
      LengthMismatch);
}

TEST_CASE("recall partials") {
  const std::vector<int> y{1, 1, 0};
  const std::vector<double> yhat{1.0, 0.0, 1.0};
  std::vector<double> out(3);
  metric_partials(y, yhat, MetricKind::recall, out);
  CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(out[1] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(out[2] == 0.0);
}

TEST_CASE("precision partials") {
  const std::vector<int> y{1, 0};
  const std::vector<double> yhat{1.0, 1.0};
  std::vector<double> out(2);
  metric_partials(y, yhat, MetricKind::precision, out);
  CHECK(out[0] == doctest::Approx(0.25).epsilon(1e-7));
  CHECK(out[1] == doctest::Approx(-0.25).epsilon(1e-7));
}

TEST_CASE("micro F1 partials") {
  const std::vector<int> y{1, 0, 1, 0};
  const std::vector<double> yhat{1.0, 1.0, 0.0, 0.0};
  std::vector<double> out(4);
  metric_partials(y, yhat, MetricKind::micro_f1, out);
  CHECK(out[0] == doctest::Approx(0.375).epsilon(1e-7));
  CHECK(out[1] == doctest::Approx(-0.125).epsilon(1e-7));
  CHECK(out[2] == doctest::Approx(0.375).epsilon(1e-7));
  CHECK(out[3] == doctest::Approx(-0.125).epsilon(1e-7));
}

TEST_CASE("partial signs") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(2, 30));
    std::vector<int> y(n);
    std::vector<double> yhat(n);
    for (std::size_t j = 0; j < n; ++j) {
      y[j] = rng.bernoulli(0.5);
      yhat[j] = rng.uniform();
    }
    std::vector<double> rec(n), prec(n);
    metric_partials(y, yhat, MetricKind::recall, rec);
    metric_partials(y, yhat, MetricKind::precision, prec);
    for (std::size_t j = 0; j < n; ++j) {
      CHECK(rec[j] >= 0.0);
      if (y[j] == 0) CHECK(prec[j] <= 0.0);
    }
  }
}

TEST_CASE("partials match finite differences of the smooth metrics") {
  Rng rng(99);
  const double h = 1e-6;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(2, 25));
    std::vector<int> y(n);
    std::vector<double> yhat(n);
    bool has_pos = false;
    for (std::size_t j = 0; j < n; ++j) {
      y[j] = rng.bernoulli(0.5);
      has_pos = has_pos || y[j] == 1;
      yhat[j] = rng.uniform(0.05, 0.95);
    }
    if (!has_pos) y[0] = 1;
    for (const auto kind :
         {MetricKind::recall, MetricKind::precision, MetricKind::micro_f1}) {
      std::vector<double> out(n);
      metric_partials(y, yhat, kind, out);
      for (std::size_t j = 0; j < n; ++j) {
        auto slice = [&](double x) {
          std::vector<double> shifted = yhat;
          shifted[j] = x;
          return smooth_metric(y, shifted, kind);
        };
        const double fd = testsupport::central_difference(slice, yhat[j], h);
        CHECK(testsupport::close(out[j], fd, 1e-5, 1e-9));
      }
    }
  }
}

TEST_CASE("smooth metrics approach the hard ratios on binary input") {
  const std::vector<int> y{1, 1, 0, 0, 1};
  const std::vector<double> yhat{1.0, 0.0, 1.0, 0.0, 1.0};
  const std::vector<int> hard{1, 0, 1, 0, 1};
  const auto r = compute_metrics(y, hard);
  CHECK(smooth_metric(y, yhat, MetricKind::recall) == doctest::Approx(r.recall).epsilon(1e-7));
  CHECK(smooth_metric(y, yhat, MetricKind::precision) ==
        doctest::Approx(r.precision).epsilon(1e-7));
  CHECK(smooth_metric(y, yhat, MetricKind::micro_f1) == doctest::Approx(r.f1).epsilon(1e-7));
}
