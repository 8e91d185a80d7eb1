#pragma once

#include <vector>

#include "trusthresh/dataset.hpp"
#include "trusthresh/decision_expr.hpp"
#include "trusthresh/optimizer.hpp"

namespace trusthresh {

struct GreedyConfig {
  int grid_size = 101;  // thresholds scanned over {0, 1/(G-1), ..., 1}
  int max_sweeps = 10;
};

// Sigmoid-surrogate method: hard step forward, logistic-bump backward with a
// learnable per-subtask steepness sigma kept positive by optimizing log sigma.
// Thresholds live in raw score space unless normalize_scores is on.
struct SglConfig {
  Objective objective = Objective::recall_at_precision;
  double target_precision = 0.9;
  double alpha = 10.0;
  double learning_rate = 0.001;
  int iterations = 4000;
  double tau_init = 0.3;
  double sigma_init = 50.0;
  bool normalize_scores = false;
  UpdateRule update_rule = UpdateRule::adam;

  // Micro-F1 runs shorter and hotter: lr 0.01, 100 iterations, tau_init 0.5.
  static SglConfig for_objective(Objective objective);

  void validate() const;  // throws ConfigError
};

// d(step)/dz surrogate: sigma * logistic(sigma z) * (1 - logistic(sigma z)).
double sgl_surrogate_grad_z(double z, double sigma);

// d(step)/d(sigma) surrogate: z * logistic(sigma z) * logistic(-sigma z).
// Bounded by ~0.2239/sigma over z, which is the vanishing-gradient weakness
// the truncated-sine surrogate avoids.
double sgl_surrogate_grad_sigma(double z, double sigma);

// Every threshold fixed at the same raw value tau; pure evaluation, no
// optimization. One trace entry, iterations_run == 0, feasibility by
// comparison with target_precision.
FitResult def_thresh(const Dataset& dataset, const DecisionExpr& expr,
                     double tau, double target_precision);

// Per-class identity-decision counterpart under pooled micro-F1.
FitResult def_thresh_multilabel(const MultiLabelDataset& dataset, double tau);

// Coordinate ascent over the raw-threshold grid: thresholds start at 0.5;
// subtasks cycle in column order; each coordinate takes the grid value with
// maximum recall among those meeting the precision target (ties -> smallest
// threshold), or, if the coordinate has no feasible value, the
// precision-maximizing one (ties -> highest recall, then smallest). Stops on
// an unchanged sweep or after max_sweeps. Reports the best feasible
// configuration visited anywhere in the scans; when none exists,
// feasible=false with the final (precision-maximizing) thresholds.
FitResult greedy_thresh(const Dataset& dataset, const DecisionExpr& expr,
                        const GreedyConfig& config, double target_precision);

// Same loop skeleton as fit (shared loss gradients, update rule, and
// best-iterate selection) with the logistic-bump surrogate in place of the
// truncated sine, and (tau, log sigma) as the learnable parameters.
FitResult sgl_thresh_fit(const Dataset& dataset, const DecisionExpr& expr,
                         const SglConfig& config);

// Per-class identity-decision counterpart under pooled micro-F1.
FitResult sgl_thresh_fit_multilabel(const MultiLabelDataset& dataset,
                                    const SglConfig& config);

}  // namespace trusthresh
