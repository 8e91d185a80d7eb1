#pragma once

#include <cstdint>
#include <span>

namespace trusthresh {

// Stabilizer added to denominators of metric partials only; reported metrics
// are exact ratios.
inline constexpr double kMetricEpsilon = 1e-8;

struct MetricReport {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Confusion counts and hard metrics over binary vectors.
// precision := 1.0 when nothing is predicted positive (an empty automation
// set cannot violate a precision constraint); recall := 0.0 when the data
// has no positives; f1 := 0.0 when its denominator is empty.
// Exact ratios with the degenerate conventions: precision 1 with no predicted
// positives, recall 0 with no actual positives, F1 0 with both empty.
MetricReport metrics_from_counts(std::int64_t tp, std::int64_t fp,
                                 std::int64_t fn, std::int64_t tn);

MetricReport compute_metrics(std::span<const int> labels,
                             std::span<const int> predictions);

enum class MetricKind { recall, precision, micro_f1 };

// Analytic partials of the smooth metric formulas with respect to each
// prediction, evaluated at `soft_predictions`. With S = sum(y*yhat),
// P = sum(y), Q = sum(yhat) and eps the stabilizer:
//   d recall   / d yhat_j = y_j / (P + eps)
//   d precision/ d yhat_j = (y_j (Q + eps) - S) / (Q + eps)^2
//   d F1       / d yhat_j = (2 y_j (P + Q + eps) - 2 S) / (P + Q + eps)^2
void metric_partials(std::span<const int> labels,
                     std::span<const double> soft_predictions, MetricKind kind,
                     std::span<double> out);

// Smooth metric values matching the partial formulas above (eps in the
// denominators); used by the relaxed objective.
double smooth_metric(std::span<const int> labels,
                     std::span<const double> soft_predictions, MetricKind kind);

}  // namespace trusthresh
