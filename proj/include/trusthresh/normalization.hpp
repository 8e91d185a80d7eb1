#pragma once

#include <span>
#include <vector>

#include "trusthresh/dataset.hpp"

namespace trusthresh {

struct NormalizationKnot {
  double raw;         // distinct raw score value
  double normalized;  // its midrank / N, in (0, 1]
};

// Monotone map between one subtask's raw scores and their rank-normalized
// values. One knot per distinct raw value; both coordinates strictly
// increasing, so the map is invertible by piecewise-linear interpolation.
class NormalizationMap {
 public:
  NormalizationMap(std::vector<NormalizationKnot> knots, std::size_t n_samples);

  const std::vector<NormalizationKnot>& knots() const { return knots_; }
  std::size_t n_samples() const { return n_samples_; }

 private:
  std::vector<NormalizationKnot> knots_;
  std::size_t n_samples_ = 0;
};

struct RankNormalized {
  Dataset dataset;                      // normalized scores, labels untouched
  std::vector<NormalizationMap> maps;   // one per subtask, column order
};

// Replaces each score with its within-column midrank divided by N, so tied
// raw scores share one normalized value and every column becomes
// distribution-free. Output values lie in (0, 1].
RankNormalized rank_normalize(const Dataset& dataset);

// Column-level worker; writes normalized values into `out` (same length).
NormalizationMap rank_normalize_column(std::span<const double> raw,
                                       std::span<double> out);

// Maps a normalized threshold back to raw-score space such that
// (q > result) == (q_normalized > tau_hat) for every score the map was built
// from. Below the smallest knot the result drops strictly below the minimum
// raw score; at or above the largest knot it returns the maximum raw score.
double denormalize_threshold(double tau_hat, const NormalizationMap& map);

}  // namespace trusthresh
