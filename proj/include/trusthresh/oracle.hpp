#pragma once

#include <cstdint>
#include <vector>

#include "trusthresh/dataset.hpp"
#include "trusthresh/decision_expr.hpp"
#include "trusthresh/optimizer.hpp"

namespace trusthresh {

struct OracleResult {
  std::vector<double> thresholds;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool feasible = false;
  int grid_size = 0;
  std::int64_t cells_evaluated = 0;  // == grid_size^n
};

// Exhaustive scan of the evenly spaced raw-threshold grid {0, 1/(G-1), ...,
// 1}^n. recall_at_precision: the feasible cell with maximum recall, ties
// broken toward the lexicographically smallest threshold vector; with no
// feasible cell, feasible=false and the cell ranked by precision, then
// recall, then lexicographic order. micro_f1: the F1-maximizing cell, same
// lexicographic tie-break. Ground truth for small instances, so no pruning:
// cost is grid_size^n full evaluations, hence the n <= 3 limit
// (TooManySubtasks) and grid_size >= 2 (ConfigError).
OracleResult grid_oracle(const Dataset& dataset, const DecisionExpr& expr,
                         int grid_size, double target_precision,
                         Objective objective);

// Same scan for per-class identity thresholds under pooled micro-F1.
// Per-class confusion counts are precomputed per grid value, so the cost is
// C * grid_size evaluations plus grid_size^C cheap combinations.
OracleResult grid_oracle_multilabel(const MultiLabelDataset& dataset,
                                    int grid_size);

}  // namespace trusthresh
