#include "trusthresh/oracle.hpp"

#include <cmath>
#include <string>

#include "trusthresh/errors.hpp"
#include "trusthresh/metrics.hpp"
#include "trusthresh/surrogate.hpp"

namespace trusthresh {

namespace {

constexpr std::size_t kMaxSubtasks = 3;

void check_grid(std::size_t n, int grid_size) {
  if (n > kMaxSubtasks) {
    throw TooManySubtasks("grid search over " + std::to_string(n) +
                          " subtasks; the limit is " + std::to_string(kMaxSubtasks));
  }
  if (grid_size < 2) {
    throw ConfigError("grid_size must be at least 2");
  }
}

std::vector<double> grid_values(int grid_size) {
  std::vector<double> values(static_cast<std::size_t>(grid_size));
  for (int g = 0; g < grid_size; ++g) {
    values[static_cast<std::size_t>(g)] =
        static_cast<double>(g) / static_cast<double>(grid_size - 1);
  }
  return values;
}

// Advance an n-digit odometer with the last digit fastest, so cells are
// visited in lexicographic order of the threshold vector.
bool next_cell(std::vector<int>& digits, int grid_size) {
  for (std::size_t i = digits.size(); i-- > 0;) {
    if (++digits[i] < grid_size) return true;
    digits[i] = 0;
  }
  return false;
}

struct Candidate {
  MetricReport metrics;
  std::vector<int> digits;
  bool valid = false;
};

// Strictly-better comparisons keep the first (lexicographically smallest)
// cell on ties, because cells arrive in lexicographic order.
bool better_recall(const MetricReport& m, const Candidate& best) {
  return !best.valid || m.recall > best.metrics.recall;
}

bool better_f1(const MetricReport& m, const Candidate& best) {
  return !best.valid || m.f1 > best.metrics.f1;
}

bool better_fallback(const MetricReport& m, const Candidate& best) {
  if (!best.valid) return true;
  if (m.precision != best.metrics.precision) {
    return m.precision > best.metrics.precision;
  }
  return m.recall > best.metrics.recall;
}

}  // namespace

OracleResult grid_oracle(const Dataset& dataset, const DecisionExpr& expr,
                         int grid_size, double target_precision,
                         Objective objective) {
  const std::size_t n = dataset.n_subtasks();
  if (expr.n_subtasks() != n) {
    throw DimensionMismatch("expression binds " + std::to_string(expr.n_subtasks()) +
                            " subtasks, dataset has " + std::to_string(n));
  }
  check_grid(n, grid_size);

  const std::vector<double> values = grid_values(grid_size);
  const std::size_t N = dataset.n_samples();

  Candidate best;      // objective-maximizing feasible cell (or F1 argmax)
  Candidate fallback;  // precision-maximizing cell for infeasible instances

  std::vector<int> digits(n, 0);
  std::vector<int> bits(n);
  std::vector<int> predictions(N);
  std::int64_t cells = 0;

  do {
    ++cells;
    for (std::size_t j = 0; j < N; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        bits[i] = hsf(dataset.score(j, i) - values[static_cast<std::size_t>(digits[i])]);
      }
      predictions[j] = eval_boolean(expr, bits);
    }
    const MetricReport m = compute_metrics(dataset.labels(), predictions);

    if (objective == Objective::micro_f1) {
      if (better_f1(m, best)) best = {m, digits, true};
    } else {
      if (m.precision >= target_precision && better_recall(m, best)) {
        best = {m, digits, true};
      }
      if (better_fallback(m, fallback)) fallback = {m, digits, true};
    }
  } while (next_cell(digits, grid_size));

  const bool feasible = best.valid;
  const Candidate& chosen = feasible ? best : fallback;

  OracleResult result;
  result.thresholds.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.thresholds.push_back(values[static_cast<std::size_t>(chosen.digits[i])]);
  }
  result.precision = chosen.metrics.precision;
  result.recall = chosen.metrics.recall;
  result.f1 = chosen.metrics.f1;
  result.feasible = feasible;
  result.grid_size = grid_size;
  result.cells_evaluated = cells;
  return result;
}

OracleResult grid_oracle_multilabel(const MultiLabelDataset& dataset,
                                    int grid_size) {
  const std::size_t C = dataset.n_classes();
  check_grid(C, grid_size);

  const std::vector<double> values = grid_values(grid_size);
  const std::size_t N = dataset.n_samples();
  const std::size_t G = values.size();

  // Pooled F1 couples the classes only through summed confusion counts, so
  // precompute per-class counts at every grid value.
  std::vector<std::int64_t> tp(C * G, 0), fp(C * G, 0), fn(C * G, 0);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t g = 0; g < G; ++g) {
      std::int64_t tp_c = 0, fp_c = 0, fn_c = 0;
      for (std::size_t s = 0; s < N; ++s) {
        const int pred = hsf(dataset.scores()(s, c) - values[g]);
        const int y = dataset.label(s, c);
        tp_c += pred & y;
        fp_c += pred & (1 - y);
        fn_c += (1 - pred) & y;
      }
      tp[c * G + g] = tp_c;
      fp[c * G + g] = fp_c;
      fn[c * G + g] = fn_c;
    }
  }

  std::vector<int> digits(C, 0);
  Candidate best;
  std::int64_t cells = 0;
  do {
    ++cells;
    std::int64_t tp_sum = 0, fp_sum = 0, fn_sum = 0;
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t g = static_cast<std::size_t>(digits[c]);
      tp_sum += tp[c * G + g];
      fp_sum += fp[c * G + g];
      fn_sum += fn[c * G + g];
    }
    const std::int64_t total = static_cast<std::int64_t>(N * C);
    const MetricReport m = metrics_from_counts(tp_sum, fp_sum, fn_sum,
                                               total - tp_sum - fp_sum - fn_sum);
    if (better_f1(m, best)) best = {m, digits, true};
  } while (next_cell(digits, grid_size));

  OracleResult result;
  result.thresholds.reserve(C);
  for (std::size_t c = 0; c < C; ++c) {
    result.thresholds.push_back(values[static_cast<std::size_t>(best.digits[c])]);
  }
  result.precision = best.metrics.precision;
  result.recall = best.metrics.recall;
  result.f1 = best.metrics.f1;
  result.feasible = true;
  result.grid_size = grid_size;
  result.cells_evaluated = cells;
  return result;
}

}  // namespace trusthresh
