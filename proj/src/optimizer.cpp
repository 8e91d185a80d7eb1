#include "trusthresh/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trusthresh/errors.hpp"
#include "trusthresh/surrogate.hpp"

namespace trusthresh {

FitConfig FitConfig::for_objective(Objective objective) {
  FitConfig config;
  config.objective = objective;
  if (objective == Objective::micro_f1) {
    config.width_init = 0.04;
    config.iterations = 400;
  }
  return config;
}

void FitConfig::validate() const {
  if (!(target_precision > 0.0 && target_precision <= 1.0)) {
    throw ConfigError("target_precision must lie in (0,1], got " +
                      std::to_string(target_precision));
  }
  if (!std::isfinite(alpha) || alpha < 0.0) {
    throw ConfigError("alpha must be finite and >= 0, got " + std::to_string(alpha));
  }
  if (!std::isfinite(learning_rate) || learning_rate <= 0.0) {
    throw ConfigError("learning_rate must be > 0, got " + std::to_string(learning_rate));
  }
  if (iterations <= 0) {
    throw ConfigError("iterations must be positive, got " + std::to_string(iterations));
  }
  if (!(tau_init >= 0.0 && tau_init <= 1.0)) {
    throw ConfigError("tau_init must lie in [0,1], got " + std::to_string(tau_init));
  }
  if (!(width_init > 0.0 && width_init < 1.0)) {
    throw ConfigError("width_init must lie in (0,1), got " + std::to_string(width_init));
  }
}

ThresholdState ThresholdState::init(std::size_t n_subtasks, const FitConfig& config) {
  ThresholdState state;
  state.tau_hat.assign(n_subtasks, config.tau_init);
  state.omega.assign(n_subtasks, logit(config.width_init));
  return state;
}

std::vector<double> ThresholdState::widths() const {
  std::vector<double> w(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i) w[i] = logistic(omega[i]);
  return w;
}

namespace {

void check_expr_matches(const Dataset& dataset, const DecisionExpr& expr) {
  if (expr.n_subtasks() != dataset.n_subtasks()) {
    throw DimensionMismatch("expression is bound to " +
                            std::to_string(expr.n_subtasks()) +
                            " subtasks, dataset has " +
                            std::to_string(dataset.n_subtasks()));
  }
}

void check_state_size(const ThresholdState& state, std::size_t n) {
  if (state.tau_hat.size() != n || state.omega.size() != n) {
    throw DimensionMismatch("threshold state sized " +
                            std::to_string(state.tau_hat.size()) + "/" +
                            std::to_string(state.omega.size()) + ", expected " +
                            std::to_string(n));
  }
}

double loss_from_metrics(const FitConfig& config, double precision, double recall,
                         double f1) {
  if (config.objective == Objective::micro_f1) return -f1;
  const double gap = config.target_precision - precision;
  return -recall + config.alpha * (gap > 0.0 ? gap : 0.0);
}

// Widths for gradient accumulation; a logistic output rounded all the way to
// 0 or 1 means the width parameter ran away and every surrogate window is
// degenerate.
std::vector<double> gradient_widths(const ThresholdState& state) {
  std::vector<double> w(state.omega.size());
  for (std::size_t i = 0; i < state.omega.size(); ++i) {
    w[i] = logistic(state.omega[i]);
    if (!(w[i] > 0.0 && w[i] < 1.0)) {
      throw NonFiniteGradient("width " + std::to_string(i) +
                              " collapsed (omega=" + std::to_string(state.omega[i]) +
                              ")");
    }
  }
  return w;
}

void forward_into(ForwardState& fs, const Dataset& dataset, const DecisionExpr& expr,
                  const ThresholdState& state, const FitConfig& config,
                  ExprWorkspace& ws) {
  check_expr_matches(dataset, expr);
  const std::size_t N = dataset.n_samples();
  const std::size_t n = dataset.n_subtasks();
  check_state_size(state, n);

  if (fs.hard_bits.rows() != N || fs.hard_bits.cols() != n) fs.hard_bits = Matrix(N, n);
  if (fs.decision_partials.rows() != N || fs.decision_partials.cols() != n) {
    fs.decision_partials = Matrix(N, n);
  }
  fs.predictions.resize(N);

  for (std::size_t j = 0; j < N; ++j) {
    const auto scores = dataset.scores().row(j);
    const auto bits = fs.hard_bits.row(j);
    for (std::size_t i = 0; i < n; ++i) {
      bits[i] = static_cast<double>(hsf(scores[i] - state.tau_hat[i]));
    }
    // At exact 0/1 inputs the product-form value is exactly the boolean value.
    const double value =
        eval_numeric_with_partials(expr, bits, fs.decision_partials.row(j), ws);
    fs.predictions[j] = value > 0.5 ? 1 : 0;
  }

  fs.metrics = compute_metrics(dataset.labels(), fs.predictions);
  fs.loss = loss_from_metrics(config, fs.metrics.precision, fs.metrics.recall,
                              fs.metrics.f1);
}

// dL/d(prediction_j) for the configured loss, with `precision_value` deciding
// the penalty branch (hard precision in training, smooth in the relaxed
// objective). The subgradient at precision == target is 0.
void loss_prediction_grads(std::span<const int> labels,
                           std::span<const double> predictions,
                           const FitConfig& config, double precision_value,
                           std::vector<double>& out, std::vector<double>& scratch) {
  const std::size_t N = labels.size();
  out.resize(N);
  if (config.objective == Objective::micro_f1) {
    metric_partials(labels, predictions, MetricKind::micro_f1, out);
    for (auto& v : out) v = -v;
    return;
  }
  metric_partials(labels, predictions, MetricKind::recall, out);
  for (auto& v : out) v = -v;
  if (config.alpha != 0.0 && precision_value < config.target_precision) {
    scratch.resize(N);
    metric_partials(labels, predictions, MetricKind::precision, scratch);
    for (std::size_t j = 0; j < N; ++j) out[j] -= config.alpha * scratch[j];
  }
}

// Chains dL/d(prediction) through the decision-function partials and the
// truncated-sine step derivatives into parameter gradients. `expr_partials`
// is N x n (d prediction_j / d bit_ji).
void accumulate_grads_into(GradientState& g, const Dataset& dataset,
                           const ThresholdState& state, const Matrix& expr_partials,
                           std::span<const double> dLdy) {
  const std::size_t N = dataset.n_samples();
  const std::size_t n = dataset.n_subtasks();
  const std::vector<double> w = gradient_widths(state);

  g.d_tau_hat.assign(n, 0.0);
  g.d_omega.assign(n, 0.0);
  std::vector<double> dw_acc(n, 0.0);

  for (std::size_t j = 0; j < N; ++j) {
    const auto scores = dataset.scores().row(j);
    const auto partials = expr_partials.row(j);
    const double upstream = dLdy[j];
    for (std::size_t i = 0; i < n; ++i) {
      const auto sg = surrogate_grads(scores[i] - state.tau_hat[i], w[i]);
      const double common = upstream * partials[i];
      g.d_tau_hat[i] -= common * sg.grad_z;
      dw_acc[i] += common * sg.grad_w;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    g.d_omega[i] = dw_acc[i] * w[i] * (1.0 - w[i]);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(g.d_tau_hat[i]) || !std::isfinite(g.d_omega[i])) {
      throw NonFiniteGradient("non-finite gradient at subtask " + std::to_string(i));
    }
  }
}

void backward_into(GradientState& g, const ForwardState& forward,
                   const Dataset& dataset, const ThresholdState& state,
                   const FitConfig& config, std::vector<double>& yhat,
                   std::vector<double>& dLdy, std::vector<double>& scratch) {
  const std::size_t N = dataset.n_samples();
  if (forward.predictions.size() != N ||
      forward.decision_partials.rows() != N ||
      forward.decision_partials.cols() != dataset.n_subtasks()) {
    throw DimensionMismatch("forward state does not match the dataset");
  }
  check_state_size(state, dataset.n_subtasks());

  yhat.resize(N);
  for (std::size_t j = 0; j < N; ++j) yhat[j] = forward.predictions[j];
  loss_prediction_grads(dataset.labels(), yhat, config, forward.metrics.precision,
                        dLdy, scratch);
  accumulate_grads_into(g, dataset, state, forward.decision_partials, dLdy);
}

struct Updater {
  MomentBuffer tau;
  MomentBuffer omega;
  long step = 0;
  explicit Updater(std::size_t n) : tau(n), omega(n) {}

  void apply(ThresholdState& state, const GradientState& g, const FitConfig& config) {
    ++step;
    tau.apply(state.tau_hat, g.d_tau_hat, step, config.learning_rate,
              config.update_rule);
    if (config.learn_widths) {
      omega.apply(state.omega, g.d_omega, step, config.learning_rate,
                  config.update_rule);
    }
    for (auto& t : state.tau_hat) t = std::clamp(t, 0.0, 1.0);
  }
};

}  // namespace

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEpsilon = 1e-8;

void MomentBuffer::apply(std::vector<double>& params,
                         const std::vector<double>& grads, long step,
                         double learning_rate, UpdateRule rule) {
  if (rule == UpdateRule::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i] -= learning_rate * grads[i];
    }
    return;
  }
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * grads[i];
    v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * grads[i] * grads[i];
    params[i] -= learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + kAdamEpsilon);
  }
}

void loss_prediction_gradients(std::span<const int> labels,
                               std::span<const double> predictions,
                               double precision_value, const FitConfig& config,
                               std::vector<double>& out) {
  std::vector<double> scratch;
  loss_prediction_grads(labels, predictions, config, precision_value, out, scratch);
}

std::pair<std::size_t, bool> select_best_iterate(const std::vector<TraceRecord>& trace,
                                                 const FitConfig& config) {
  if (config.objective == Objective::micro_f1) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < trace.size(); ++k) {
      if (trace[k].f1 > trace[best].f1) best = k;
    }
    return {best, true};
  }
  bool found = false;
  std::size_t best = 0;
  double best_recall = -1.0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (trace[k].precision >= config.target_precision && trace[k].recall > best_recall) {
      best = k;
      best_recall = trace[k].recall;
      found = true;
    }
  }
  if (!found) return {trace.size() - 1, false};
  return {best, true};
}

MetricReport evaluate_thresholds(const Dataset& dataset, const DecisionExpr& expr,
                                 std::span<const double> thresholds) {
  check_expr_matches(dataset, expr);
  const std::size_t n = dataset.n_subtasks();
  if (thresholds.size() != n) {
    throw LengthMismatch("got " + std::to_string(thresholds.size()) +
                         " thresholds for " + std::to_string(n) + " subtasks");
  }
  const std::size_t N = dataset.n_samples();
  std::vector<int> bits(n);
  std::vector<int> predictions(N);
  for (std::size_t j = 0; j < N; ++j) {
    const auto scores = dataset.scores().row(j);
    for (std::size_t i = 0; i < n; ++i) bits[i] = hsf(scores[i] - thresholds[i]);
    predictions[j] = eval_boolean(expr, bits);
  }
  return compute_metrics(dataset.labels(), predictions);
}

ForwardState forward_pass(const Dataset& normalized, const DecisionExpr& expr,
                          const ThresholdState& state, const FitConfig& config) {
  ForwardState fs;
  ExprWorkspace ws;
  forward_into(fs, normalized, expr, state, config, ws);
  return fs;
}

GradientState backward_pass(const ForwardState& forward, const Dataset& normalized,
                            const ThresholdState& state, const FitConfig& config) {
  GradientState g;
  std::vector<double> yhat;
  std::vector<double> dLdy;
  std::vector<double> scratch;
  backward_into(g, forward, normalized, state, config, yhat, dLdy, scratch);
  return g;
}

FitResult fit(const Dataset& dataset, const DecisionExpr& expr, const FitConfig& config) {
  config.validate();
  check_expr_matches(dataset, expr);
  if (config.objective == Objective::recall_at_precision &&
      (dataset.positive_count() == 0 || dataset.negative_count() == 0)) {
    throw DegenerateLabels(
        "recall-at-precision fitting needs at least one positive and one "
        "negative label");
  }

  const std::size_t n = dataset.n_subtasks();
  std::optional<RankNormalized> norm;
  const Dataset* work = &dataset;
  if (config.normalize_scores) {
    norm.emplace(rank_normalize(dataset));
    work = &norm->dataset;
  }

  ThresholdState state = ThresholdState::init(n, config);
  Updater updater(n);
  ForwardState fs;
  GradientState grads;
  ExprWorkspace ws;
  std::vector<double> yhat;
  std::vector<double> dLdy;
  std::vector<double> scratch;

  std::vector<TraceRecord> trace;
  trace.reserve(static_cast<std::size_t>(config.iterations) + 1);

  for (int step = 0;; ++step) {
    forward_into(fs, *work, expr, state, config, ws);
    trace.push_back({fs.loss, fs.metrics.precision, fs.metrics.recall, fs.metrics.f1,
                     state.tau_hat, state.widths(), {}});
    if (step == config.iterations) break;
    backward_into(grads, fs, *work, state, config, yhat, dLdy, scratch);
    updater.apply(state, grads, config);
  }

  const auto [best_index, feasible] = select_best_iterate(trace, config);
  const TraceRecord& best = trace[best_index];

  FitResult result;
  result.thresholds_normalized = best.tau_hat;
  result.widths = best.widths;
  result.thresholds_raw.resize(n);
  if (config.normalize_scores) {
    for (std::size_t i = 0; i < n; ++i) {
      result.thresholds_raw[i] = denormalize_threshold(best.tau_hat[i], norm->maps[i]);
    }
  } else {
    result.thresholds_raw = best.tau_hat;
  }

  const MetricReport raw = evaluate_thresholds(dataset, expr, result.thresholds_raw);
  result.precision = raw.precision;
  result.recall = raw.recall;
  result.f1 = raw.f1;
  result.feasible = feasible;
  result.iterations_run = config.iterations;
  result.trace = std::move(trace);
  return result;
}

FitResult fit_multilabel(const MultiLabelDataset& dataset, const FitConfig& config) {
  config.validate();
  if (config.objective != Objective::micro_f1) {
    throw ConfigError("fit_multilabel requires the micro_f1 objective");
  }

  const std::size_t N = dataset.n_samples();
  const std::size_t C = dataset.n_classes();
  const std::size_t total = N * C;

  Matrix work = dataset.scores();
  std::vector<NormalizationMap> maps;
  if (config.normalize_scores) {
    maps.reserve(C);
    std::vector<double> column(N);
    std::vector<double> normalized(N);
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t s = 0; s < N; ++s) column[s] = work(s, c);
      maps.push_back(rank_normalize_column(column, normalized));
      for (std::size_t s = 0; s < N; ++s) work(s, c) = normalized[s];
    }
  }

  ThresholdState state = ThresholdState::init(C, config);
  Updater updater(C);
  GradientState grads;
  grads.d_tau_hat.assign(C, 0.0);
  grads.d_omega.assign(C, 0.0);

  std::vector<int> predictions(total);
  std::vector<double> yhat(total);
  std::vector<double> dLdy;
  std::vector<double> scratch;
  std::vector<double> dw_acc(C);

  std::vector<TraceRecord> trace;
  trace.reserve(static_cast<std::size_t>(config.iterations) + 1);

  for (int step = 0;; ++step) {
    // Identity decision per class; metrics pool over the sample x class grid.
    for (std::size_t s = 0; s < N; ++s) {
      for (std::size_t c = 0; c < C; ++c) {
        const int bit = hsf(work(s, c) - state.tau_hat[c]);
        predictions[s * C + c] = bit;
        yhat[s * C + c] = static_cast<double>(bit);
      }
    }
    const MetricReport metrics = compute_metrics(dataset.labels(), predictions);
    const double loss = -metrics.f1;
    trace.push_back({loss, metrics.precision, metrics.recall, metrics.f1,
                     state.tau_hat, state.widths(), {}});
    if (step == config.iterations) break;

    loss_prediction_grads(dataset.labels(), yhat, config, metrics.precision, dLdy,
                          scratch);
    const std::vector<double> w = gradient_widths(state);
    std::fill(grads.d_tau_hat.begin(), grads.d_tau_hat.end(), 0.0);
    std::fill(dw_acc.begin(), dw_acc.end(), 0.0);
    for (std::size_t s = 0; s < N; ++s) {
      for (std::size_t c = 0; c < C; ++c) {
        const auto sg = surrogate_grads(work(s, c) - state.tau_hat[c], w[c]);
        const double upstream = dLdy[s * C + c];
        grads.d_tau_hat[c] -= upstream * sg.grad_z;
        dw_acc[c] += upstream * sg.grad_w;
      }
    }
    for (std::size_t c = 0; c < C; ++c) {
      grads.d_omega[c] = dw_acc[c] * w[c] * (1.0 - w[c]);
      if (!std::isfinite(grads.d_tau_hat[c]) || !std::isfinite(grads.d_omega[c])) {
        throw NonFiniteGradient("non-finite gradient at class " + std::to_string(c));
      }
    }
    updater.apply(state, grads, config);
  }

  const auto [best_index, feasible] = select_best_iterate(trace, config);
  const TraceRecord& best = trace[best_index];

  FitResult result;
  result.thresholds_normalized = best.tau_hat;
  result.widths = best.widths;
  result.thresholds_raw.resize(C);
  if (config.normalize_scores) {
    for (std::size_t c = 0; c < C; ++c) {
      result.thresholds_raw[c] = denormalize_threshold(best.tau_hat[c], maps[c]);
    }
  } else {
    result.thresholds_raw = best.tau_hat;
  }

  for (std::size_t s = 0; s < N; ++s) {
    for (std::size_t c = 0; c < C; ++c) {
      predictions[s * C + c] = hsf(dataset.scores()(s, c) - result.thresholds_raw[c]);
    }
  }
  const MetricReport raw = compute_metrics(dataset.labels(), predictions);
  result.precision = raw.precision;
  result.recall = raw.recall;
  result.f1 = raw.f1;
  result.feasible = feasible;
  result.iterations_run = config.iterations;
  result.trace = std::move(trace);
  return result;
}

namespace {

// Soft forward for the relaxed objective: smoothed bits, product-form value
// as the prediction, partials taken at the soft bits.
void soft_forward(const Dataset& dataset, const DecisionExpr& expr,
                  const ThresholdState& state, Matrix& partials,
                  std::vector<double>& y_soft) {
  check_expr_matches(dataset, expr);
  const std::size_t N = dataset.n_samples();
  const std::size_t n = dataset.n_subtasks();
  check_state_size(state, n);

  const std::vector<double> w = state.widths();
  partials = Matrix(N, n);
  y_soft.resize(N);
  std::vector<double> bits(n);
  ExprWorkspace ws;
  for (std::size_t j = 0; j < N; ++j) {
    const auto scores = dataset.scores().row(j);
    for (std::size_t i = 0; i < n; ++i) {
      bits[i] = smoothed_hsf(scores[i] - state.tau_hat[i], w[i]);
    }
    y_soft[j] = eval_numeric_with_partials(expr, bits, partials.row(j), ws);
  }
}

}  // namespace

double smoothed_loss(const Dataset& normalized, const DecisionExpr& expr,
                     const ThresholdState& state, const FitConfig& config) {
  Matrix partials;
  std::vector<double> y_soft;
  soft_forward(normalized, expr, state, partials, y_soft);
  const auto& labels = normalized.labels();
  if (config.objective == Objective::micro_f1) {
    return -smooth_metric(labels, y_soft, MetricKind::micro_f1);
  }
  const double recall = smooth_metric(labels, y_soft, MetricKind::recall);
  const double precision = smooth_metric(labels, y_soft, MetricKind::precision);
  const double gap = config.target_precision - precision;
  return -recall + config.alpha * (gap > 0.0 ? gap : 0.0);
}

GradientState smoothed_loss_gradients(const Dataset& normalized,
                                      const DecisionExpr& expr,
                                      const ThresholdState& state,
                                      const FitConfig& config) {
  Matrix partials;
  std::vector<double> y_soft;
  soft_forward(normalized, expr, state, partials, y_soft);
  const double precision =
      smooth_metric(normalized.labels(), y_soft, MetricKind::precision);
  std::vector<double> dLdy;
  std::vector<double> scratch;
  loss_prediction_grads(normalized.labels(), y_soft, config, precision, dLdy, scratch);
  GradientState g;
  accumulate_grads_into(g, normalized, state, partials, dLdy);
  return g;
}

}  // namespace trusthresh
