#include "trusthresh/metrics.hpp"

#include <string>

#include "trusthresh/errors.hpp"

namespace trusthresh {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw LengthMismatch("labels length " + std::to_string(a) +
                         " != predictions length " + std::to_string(b));
  }
}

}  // namespace

MetricReport metrics_from_counts(std::int64_t tp, std::int64_t fp,
                                 std::int64_t fn, std::int64_t tn) {
  MetricReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.tn = tn;
  r.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp)
                              : 1.0;
  r.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn)
                           : 0.0;
  const std::int64_t f1_denom = 2 * tp + fp + fn;
  r.f1 = f1_denom > 0 ? 2.0 * static_cast<double>(tp) / static_cast<double>(f1_denom)
                      : 0.0;
  return r;
}

MetricReport compute_metrics(std::span<const int> labels,
                             std::span<const int> predictions) {
  check_lengths(labels.size(), predictions.size());
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    const int y = labels[j];
    const int p = predictions[j];
    tp += (y == 1 && p == 1);
    fp += (y == 0 && p == 1);
    fn += (y == 1 && p == 0);
    tn += (y == 0 && p == 0);
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

void metric_partials(std::span<const int> labels,
                     std::span<const double> soft_predictions, MetricKind kind,
                     std::span<double> out) {
  check_lengths(labels.size(), soft_predictions.size());
  check_lengths(labels.size(), out.size());

  double s = 0.0;  // sum y*yhat
  double p = 0.0;  // sum y
  double q = 0.0;  // sum yhat
  for (std::size_t j = 0; j < labels.size(); ++j) {
    s += labels[j] * soft_predictions[j];
    p += labels[j];
    q += soft_predictions[j];
  }

  switch (kind) {
    case MetricKind::recall: {
      const double denom = p + kMetricEpsilon;
      for (std::size_t j = 0; j < labels.size(); ++j) {
        out[j] = labels[j] / denom;
      }
      break;
    }
    case MetricKind::precision: {
      const double denom = q + kMetricEpsilon;
      const double denom_sq = denom * denom;
      for (std::size_t j = 0; j < labels.size(); ++j) {
        out[j] = (labels[j] * denom - s) / denom_sq;
      }
      break;
    }
    case MetricKind::micro_f1: {
      const double denom = p + q + kMetricEpsilon;
      const double denom_sq = denom * denom;
      for (std::size_t j = 0; j < labels.size(); ++j) {
        out[j] = (2.0 * labels[j] * denom - 2.0 * s) / denom_sq;
      }
      break;
    }
  }
}

double smooth_metric(std::span<const int> labels,
                     std::span<const double> soft_predictions, MetricKind kind) {
  check_lengths(labels.size(), soft_predictions.size());
  double s = 0.0;
  double p = 0.0;
  double q = 0.0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    s += labels[j] * soft_predictions[j];
    p += labels[j];
    q += soft_predictions[j];
  }
  switch (kind) {
    case MetricKind::recall:
      return s / (p + kMetricEpsilon);
    case MetricKind::precision:
      return s / (q + kMetricEpsilon);
    case MetricKind::micro_f1:
      return 2.0 * s / (p + q + kMetricEpsilon);
  }
  return 0.0;
}

}  // namespace trusthresh
