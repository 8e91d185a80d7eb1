#include "trusthresh/normalization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace trusthresh {

namespace {

// Strictly below any raw score while staying well clear of rounding noise.
constexpr double kBelowMinPad = 0x1p-20;

}  // namespace

NormalizationMap::NormalizationMap(std::vector<NormalizationKnot> knots,
                                   std::size_t n_samples)
    : knots_(std::move(knots)), n_samples_(n_samples) {
  for (std::size_t k = 0; k < knots_.size(); ++k) {
    const auto& knot = knots_[k];
    if (!(knot.normalized > 0.0 && knot.normalized <= 1.0)) {
      throw DimensionMismatch("normalized knot outside (0,1]");
    }
    if (k > 0 && !(knots_[k - 1].raw < knot.raw &&
                   knots_[k - 1].normalized < knot.normalized)) {
      throw DimensionMismatch("normalization knots must be strictly increasing");
    }
  }
}

NormalizationMap rank_normalize_column(std::span<const double> raw,
                                       std::span<double> out) {
  const std::size_t n = raw.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });

  std::vector<NormalizationKnot> knots;
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && raw[order[end]] == raw[order[start]]) ++end;
    // Ordinal ranks are 1-based; ties receive the average of their ranks.
    const double midrank = 0.5 * static_cast<double>(start + 1 + end);
    const double normalized = midrank / static_cast<double>(n);
    for (std::size_t k = start; k < end; ++k) out[order[k]] = normalized;
    knots.push_back({raw[order[start]], normalized});
    start = end;
  }
  return NormalizationMap(std::move(knots), n);
}

RankNormalized rank_normalize(const Dataset& dataset) {
  const std::size_t n_rows = dataset.n_samples();
  const std::size_t n_cols = dataset.n_subtasks();
  Matrix normalized(n_rows, n_cols);
  std::vector<NormalizationMap> maps;
  maps.reserve(n_cols);

  std::vector<double> column(n_rows);
  std::vector<double> out(n_rows);
  for (std::size_t i = 0; i < n_cols; ++i) {
    for (std::size_t j = 0; j < n_rows; ++j) column[j] = dataset.score(j, i);
    maps.push_back(rank_normalize_column(column, out));
    for (std::size_t j = 0; j < n_rows; ++j) normalized(j, i) = out[j];
  }

  Dataset result(dataset.subtask_names(), std::move(normalized), dataset.labels());
  return {std::move(result), std::move(maps)};
}

double denormalize_threshold(double tau_hat, const NormalizationMap& map) {
  const auto& knots = map.knots();
  if (knots.empty()) throw EmptyMap("normalization map has no knots");

  if (tau_hat < knots.front().normalized) {
    // Every sample must still pass a strict '>' comparison.
    return knots.front().raw - kBelowMinPad;
  }
  if (tau_hat >= knots.back().normalized) {
    // No sample may exceed the returned threshold.
    return knots.back().raw;
  }

  // tau_hat lies in [front.normalized, back.normalized); find the bracketing
  // knot pair and interpolate linearly on (normalized -> raw).
  const auto upper = std::upper_bound(
      knots.begin(), knots.end(), tau_hat,
      [](double value, const NormalizationKnot& k) { return value < k.normalized; });
  const auto lower = upper - 1;
  const double t = (tau_hat - lower->normalized) / (upper->normalized - lower->normalized);
  double raw = lower->raw + t * (upper->raw - lower->raw);
  // tau_hat < upper->normalized, so the upper knot's samples must pass a
  // strict '>'. Rounding can push the interpolation onto upper->raw exactly;
  // step one representable value back inside the bracket when it does.
  if (raw >= upper->raw) raw = std::nextafter(upper->raw, lower->raw);
  if (raw < lower->raw) raw = lower->raw;
  return raw;
}

}  // namespace trusthresh
