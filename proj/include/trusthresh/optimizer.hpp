#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "trusthresh/dataset.hpp"
#include "trusthresh/decision_expr.hpp"
#include "trusthresh/matrix.hpp"
#include "trusthresh/metrics.hpp"
#include "trusthresh/normalization.hpp"

namespace trusthresh {

enum class Objective { recall_at_precision, micro_f1 };
enum class UpdateRule { adam, sgd };

struct FitConfig {
  Objective objective = Objective::recall_at_precision;
  double target_precision = 0.9;
  double alpha = 10.0;       // penalty strictness; 0 disables the constraint
  double learning_rate = 0.01;
  int iterations = 1000;
  double tau_init = 0.5;
  double width_init = 0.1;
  bool normalize_scores = true;
  bool learn_widths = true;
  UpdateRule update_rule = UpdateRule::adam;

  // Defaults per objective: micro-F1 runs shorter with a narrower ramp.
  static FitConfig for_objective(Objective objective);

  // Throws ConfigError on any out-of-range field.
  void validate() const;
};

// Learnable parameters: normalized thresholds plus unconstrained width
// parameters, widths derived through the logistic so they stay in (0,1).
struct ThresholdState {
  std::vector<double> tau_hat;
  std::vector<double> omega;

  static ThresholdState init(std::size_t n_subtasks, const FitConfig& config);
  std::vector<double> widths() const;
};

struct ForwardState {
  Matrix hard_bits;          // N x n, hsf(q_hat - tau_hat)
  std::vector<int> predictions;
  Matrix decision_partials;  // N x n, d(prediction_j)/d(bit_ji) at the hard bits
  MetricReport metrics;
  double loss = 0.0;
};

struct GradientState {
  std::vector<double> d_tau_hat;
  std::vector<double> d_omega;
};

struct TraceRecord {
  double loss = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<double> tau_hat;
  std::vector<double> widths;  // empty for methods without widths
  std::vector<double> sigma;   // sigmoid-surrogate method only
};

struct FitResult {
  std::vector<double> thresholds_normalized;
  std::vector<double> thresholds_raw;
  std::vector<double> widths;  // empty for methods without widths
  std::vector<double> sigma;   // SGLThresh only; empty otherwise
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool feasible = false;
  std::vector<TraceRecord> trace;  // entry 0 = initial state, one per update after
  int iterations_run = 0;
};

// One first/second-moment pair per parameter. `apply` advances the parameters
// by one bias-corrected Adam step (or plain SGD). The caller owns the step
// counter so several parameter groups can share one schedule.
struct MomentBuffer {
  std::vector<double> m;
  std::vector<double> v;
  explicit MomentBuffer(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void apply(std::vector<double>& params, const std::vector<double>& grads,
             long step, double learning_rate, UpdateRule rule);
};

// dL/d(prediction) for the configured objective at the given (hard or soft)
// predictions; `precision_value` picks the penalty branch (subgradient 0 at
// the target). Shared by every gradient-based method so they all descend the
// identical loss.
void loss_prediction_gradients(std::span<const int> labels,
                               std::span<const double> predictions,
                               double precision_value, const FitConfig& config,
                               std::vector<double>& out);

// Best-iterate policy shared by the trained methods: max recall among iterates
// meeting the hard precision target (ties -> earliest); if none qualifies, the
// final iterate with feasible=false. Micro-F1: the F1 argmax, always feasible.
std::pair<std::size_t, bool> select_best_iterate(const std::vector<TraceRecord>& trace,
                                                 const FitConfig& config);

// Hard confusion metrics of the decision function at fixed thresholds
// (whatever space the thresholds and the dataset's scores share). Shared by
// the fit result recomputation, the baselines, and the grid oracle.
MetricReport evaluate_thresholds(const Dataset& dataset, const DecisionExpr& expr,
                                 std::span<const double> thresholds);

// Hard forward evaluation: step-function bits through the numeric decision
// function, hard confusion metrics, and the penalty (or -F1) loss.
ForwardState forward_pass(const Dataset& normalized, const DecisionExpr& expr,
                          const ThresholdState& state, const FitConfig& config);

// Surrogate backward pass: metric partials at the hard predictions, chained
// through the decision-function partials and the truncated-sine step
// derivatives, with the logistic chain rule for the width parameters.
GradientState backward_pass(const ForwardState& forward, const Dataset& normalized,
                            const ThresholdState& state, const FitConfig& config);

// Full fit loop: (optional) rank normalization, iterations of
// forward/backward/update with tau_hat clamped to [0,1], then selection of
// the best feasible iterate (max recall with hard precision >= target; for
// micro-F1, max F1). Reported metrics are recomputed from thresholds_raw on
// the raw dataset. Deterministic.
FitResult fit(const Dataset& dataset, const DecisionExpr& expr,
              const FitConfig& config);

// Per-class identity thresholds optimized for pooled micro-F1 over the
// flattened sample x class grid. Requires objective == micro_f1.
FitResult fit_multilabel(const MultiLabelDataset& dataset, const FitConfig& config);

// Fully relaxed objective: smoothed step bits everywhere, numeric decision
// value as the soft prediction, stabilized smooth metrics. The analytic
// gradients below are exact derivatives of this scalar, which makes the pair
// finite-difference-checkable; the training loop's backward_pass reuses the
// same assembly with hard forward quantities instead.
double smoothed_loss(const Dataset& normalized, const DecisionExpr& expr,
                     const ThresholdState& state, const FitConfig& config);
GradientState smoothed_loss_gradients(const Dataset& normalized,
                                      const DecisionExpr& expr,
                                      const ThresholdState& state,
                                      const FitConfig& config);

}  // namespace trusthresh
