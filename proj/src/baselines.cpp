#include "trusthresh/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "trusthresh/errors.hpp"
#include "trusthresh/metrics.hpp"
#include "trusthresh/normalization.hpp"
#include "trusthresh/surrogate.hpp"

namespace trusthresh {

namespace {

void check_expr_matches(const Dataset& dataset, const DecisionExpr& expr) {
  if (expr.n_subtasks() != dataset.n_subtasks()) {
    throw DimensionMismatch("expression binds " + std::to_string(expr.n_subtasks()) +
                            " subtasks, dataset has " +
                            std::to_string(dataset.n_subtasks()));
  }
}

void check_target(double target_precision) {
  if (!(target_precision > 0.0 && target_precision <= 1.0)) {
    throw ConfigError("target_precision must lie in (0, 1]");
  }
}

TraceRecord record_of(const MetricReport& m, double loss,
                      std::vector<double> thresholds) {
  return {loss, m.precision, m.recall, m.f1, std::move(thresholds), {}, {}};
}

}  // namespace

SglConfig SglConfig::for_objective(Objective objective) {
  SglConfig config;
  config.objective = objective;
  if (objective == Objective::micro_f1) {
    config.learning_rate = 0.01;
    config.iterations = 100;
    config.tau_init = 0.5;
  }
  return config;
}

void SglConfig::validate() const {
  check_target(target_precision);
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (!(tau_init >= 0.0 && tau_init <= 1.0)) {
    throw ConfigError("tau_init must lie in [0, 1]");
  }
  if (!(sigma_init > 0.0)) throw ConfigError("sigma_init must be positive");
}

double sgl_surrogate_grad_z(double z, double sigma) {
  const double s = logistic(sigma * z);
  return sigma * s * (1.0 - s);
}

double sgl_surrogate_grad_sigma(double z, double sigma) {
  return z * logistic(sigma * z) * logistic(-sigma * z);
}

FitResult def_thresh(const Dataset& dataset, const DecisionExpr& expr,
                     double tau, double target_precision) {
  check_expr_matches(dataset, expr);
  check_target(target_precision);
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");

  const std::vector<double> thresholds(dataset.n_subtasks(), tau);
  const MetricReport m = evaluate_thresholds(dataset, expr, thresholds);

  FitResult result;
  result.thresholds_normalized = thresholds;
  result.thresholds_raw = thresholds;
  result.precision = m.precision;
  result.recall = m.recall;
  result.f1 = m.f1;
  result.feasible = m.precision >= target_precision;
  result.trace.push_back(record_of(m, -m.recall, thresholds));
  result.iterations_run = 0;
  return result;
}

FitResult def_thresh_multilabel(const MultiLabelDataset& dataset, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  const std::size_t N = dataset.n_samples();
  const std::size_t C = dataset.n_classes();

  std::vector<int> predictions(N * C);
  for (std::size_t s = 0; s < N; ++s) {
    for (std::size_t c = 0; c < C; ++c) {
      predictions[s * C + c] = hsf(dataset.scores()(s, c) - tau);
    }
  }
  const MetricReport m = compute_metrics(dataset.labels(), predictions);

  FitResult result;
  result.thresholds_normalized.assign(C, tau);
  result.thresholds_raw.assign(C, tau);
  result.precision = m.precision;
  result.recall = m.recall;
  result.f1 = m.f1;
  result.feasible = true;  // micro-F1 carries no constraint
  result.trace.push_back(record_of(m, -m.f1, result.thresholds_raw));
  result.iterations_run = 0;
  return result;
}

FitResult greedy_thresh(const Dataset& dataset, const DecisionExpr& expr,
                        const GreedyConfig& config, double target_precision) {
  check_expr_matches(dataset, expr);
  check_target(target_precision);
  if (config.grid_size < 2) throw ConfigError("grid_size must be at least 2");
  if (config.max_sweeps < 1) throw ConfigError("max_sweeps must be at least 1");

  const std::size_t n = dataset.n_subtasks();
  const int G = config.grid_size;
  std::vector<double> values(static_cast<std::size_t>(G));
  for (int g = 0; g < G; ++g) {
    values[static_cast<std::size_t>(g)] =
        static_cast<double>(g) / static_cast<double>(G - 1);
  }

  std::vector<double> current(n, 0.5);
  std::vector<double> best_feasible;  // best configuration visited anywhere
  MetricReport best_feasible_metrics;
  auto visit = [&](const std::vector<double>& thresholds, const MetricReport& m) {
    if (m.precision >= target_precision &&
        (best_feasible.empty() || m.recall > best_feasible_metrics.recall)) {
      best_feasible = thresholds;
      best_feasible_metrics = m;
    }
  };

  std::vector<TraceRecord> trace;
  {
    const MetricReport m = evaluate_thresholds(dataset, expr, current);
    visit(current, m);
    trace.push_back(record_of(m, -m.recall, current));
  }

  int sweeps = 0;
  std::vector<double> candidate(n);
  for (; sweeps < config.max_sweeps;) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      candidate = current;
      // best feasible grid value for this coordinate, and the
      // precision-then-recall fallback when none is feasible
      bool any_feasible = false;
      double chosen = current[i];
      MetricReport chosen_metrics;
      MetricReport fallback_metrics;
      double fallback = values[0];
      bool fallback_set = false;
      for (int g = 0; g < G; ++g) {
        candidate[i] = values[static_cast<std::size_t>(g)];
        const MetricReport m = evaluate_thresholds(dataset, expr, candidate);
        visit(candidate, m);
        if (m.precision >= target_precision) {
          if (!any_feasible || m.recall > chosen_metrics.recall) {
            any_feasible = true;
            chosen = candidate[i];
            chosen_metrics = m;
          }
        }
        if (!fallback_set || m.precision > fallback_metrics.precision ||
            (m.precision == fallback_metrics.precision &&
             m.recall > fallback_metrics.recall)) {
          fallback_set = true;
          fallback = candidate[i];
          fallback_metrics = m;
        }
      }
      const double next = any_feasible ? chosen : fallback;
      if (next != current[i]) {
        current[i] = next;
        changed = true;
      }
    }
    ++sweeps;
    const MetricReport m = evaluate_thresholds(dataset, expr, current);
    trace.push_back(record_of(m, -m.recall, current));
    if (!changed) break;
  }

  FitResult result;
  result.feasible = !best_feasible.empty();
  result.thresholds_raw = result.feasible ? best_feasible : current;
  result.thresholds_normalized = result.thresholds_raw;
  const MetricReport m = evaluate_thresholds(dataset, expr, result.thresholds_raw);
  result.precision = m.precision;
  result.recall = m.recall;
  result.f1 = m.f1;
  result.iterations_run = sweeps;
  result.trace = std::move(trace);
  return result;
}

namespace {

// The optimizer entry points take a FitConfig; the fields the shared pieces
// read (objective, target, alpha, update rule) are mirrored here so the
// sigmoid-surrogate method descends the identical loss and selects iterates
// by the identical policy.
FitConfig proxy_config(const SglConfig& config) {
  FitConfig proxy;
  proxy.objective = config.objective;
  proxy.target_precision = config.target_precision;
  proxy.alpha = config.alpha;
  proxy.learning_rate = config.learning_rate;
  proxy.iterations = config.iterations;
  proxy.update_rule = config.update_rule;
  return proxy;
}

}  // namespace

FitResult sgl_thresh_fit(const Dataset& dataset, const DecisionExpr& expr,
                         const SglConfig& config) {
  config.validate();
  check_expr_matches(dataset, expr);
  if (config.objective == Objective::recall_at_precision &&
      (dataset.positive_count() == 0 || dataset.negative_count() == 0)) {
    throw DegenerateLabels("recall-at-precision fitting needs both label values");
  }

  const std::size_t N = dataset.n_samples();
  const std::size_t n = dataset.n_subtasks();
  const FitConfig proxy = proxy_config(config);

  std::optional<RankNormalized> normalized;
  if (config.normalize_scores) normalized.emplace(rank_normalize(dataset));
  const Dataset* work = normalized ? &normalized->dataset : &dataset;

  ThresholdState state;  // omega unused; forward reads tau_hat only
  state.tau_hat.assign(n, config.tau_init);
  state.omega.assign(n, 0.0);
  std::vector<double> log_sigma(n, std::log(config.sigma_init));

  MomentBuffer tau_moments(n), sigma_moments(n);
  long step_count = 0;
  std::vector<double> yhat(N), dLdy;
  std::vector<double> d_tau(n), d_log_sigma(n), sigma(n);

  std::vector<TraceRecord> trace;
  trace.reserve(static_cast<std::size_t>(config.iterations) + 1);

  for (int step = 0;; ++step) {
    for (std::size_t i = 0; i < n; ++i) sigma[i] = std::exp(log_sigma[i]);
    const ForwardState fs = forward_pass(*work, expr, state, proxy);
    trace.push_back({fs.loss, fs.metrics.precision, fs.metrics.recall,
                     fs.metrics.f1, state.tau_hat, {}, sigma});
    if (step == config.iterations) break;

    for (std::size_t j = 0; j < N; ++j) yhat[j] = fs.predictions[j];
    loss_prediction_gradients(work->labels(), yhat, fs.metrics.precision, proxy,
                              dLdy);

    std::fill(d_tau.begin(), d_tau.end(), 0.0);
    std::fill(d_log_sigma.begin(), d_log_sigma.end(), 0.0);
    for (std::size_t j = 0; j < N; ++j) {
      const auto scores = work->scores().row(j);
      const auto partials = fs.decision_partials.row(j);
      for (std::size_t i = 0; i < n; ++i) {
        const double z = scores[i] - state.tau_hat[i];
        const double upstream = dLdy[j] * partials[i];
        d_tau[i] -= upstream * sgl_surrogate_grad_z(z, sigma[i]);
        d_log_sigma[i] += upstream * sgl_surrogate_grad_sigma(z, sigma[i]) * sigma[i];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(d_tau[i]) || !std::isfinite(d_log_sigma[i])) {
        throw NonFiniteGradient("non-finite gradient at subtask " +
                                std::to_string(i));
      }
    }

    ++step_count;
    tau_moments.apply(state.tau_hat, d_tau, step_count, config.learning_rate,
                      config.update_rule);
    sigma_moments.apply(log_sigma, d_log_sigma, step_count, config.learning_rate,
                        config.update_rule);
    for (auto& t : state.tau_hat) t = std::clamp(t, 0.0, 1.0);
  }

  const auto [best_index, feasible] = select_best_iterate(trace, proxy);
  const TraceRecord& best = trace[best_index];

  FitResult result;
  result.thresholds_normalized = best.tau_hat;
  result.sigma = best.sigma;
  result.thresholds_raw.resize(n);
  if (normalized) {
    for (std::size_t i = 0; i < n; ++i) {
      result.thresholds_raw[i] =
          denormalize_threshold(best.tau_hat[i], normalized->maps[i]);
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

FitResult sgl_thresh_fit_multilabel(const MultiLabelDataset& dataset,
                                    const SglConfig& config) {
  config.validate();
  if (config.objective != Objective::micro_f1) {
    throw ConfigError("multi-label fitting requires the micro_f1 objective");
  }

  const std::size_t N = dataset.n_samples();
  const std::size_t C = dataset.n_classes();
  const std::size_t total = N * C;
  const FitConfig proxy = proxy_config(config);

  Matrix work = dataset.scores();
  std::vector<NormalizationMap> maps;
  if (config.normalize_scores) {
    maps.reserve(C);
    std::vector<double> column(N), normalized(N);
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t s = 0; s < N; ++s) column[s] = work(s, c);
      maps.push_back(rank_normalize_column(column, normalized));
      for (std::size_t s = 0; s < N; ++s) work(s, c) = normalized[s];
    }
  }

  std::vector<double> tau(C, config.tau_init);
  std::vector<double> log_sigma(C, std::log(config.sigma_init));
  MomentBuffer tau_moments(C), sigma_moments(C);
  long step_count = 0;

  std::vector<int> predictions(total);
  std::vector<double> yhat(total), dLdy;
  std::vector<double> d_tau(C), d_log_sigma(C), sigma(C);

  std::vector<TraceRecord> trace;
  trace.reserve(static_cast<std::size_t>(config.iterations) + 1);

  for (int step = 0;; ++step) {
    for (std::size_t c = 0; c < C; ++c) sigma[c] = std::exp(log_sigma[c]);
    for (std::size_t s = 0; s < N; ++s) {
      for (std::size_t c = 0; c < C; ++c) {
        const int bit = hsf(work(s, c) - tau[c]);
        predictions[s * C + c] = bit;
        yhat[s * C + c] = static_cast<double>(bit);
      }
    }
    const MetricReport m = compute_metrics(dataset.labels(), predictions);
    trace.push_back({-m.f1, m.precision, m.recall, m.f1, tau, {}, sigma});
    if (step == config.iterations) break;

    loss_prediction_gradients(dataset.labels(), yhat, m.precision, proxy, dLdy);
    std::fill(d_tau.begin(), d_tau.end(), 0.0);
    std::fill(d_log_sigma.begin(), d_log_sigma.end(), 0.0);
    for (std::size_t s = 0; s < N; ++s) {
      for (std::size_t c = 0; c < C; ++c) {
        const double z = work(s, c) - tau[c];
        const double upstream = dLdy[s * C + c];
        d_tau[c] -= upstream * sgl_surrogate_grad_z(z, sigma[c]);
        d_log_sigma[c] += upstream * sgl_surrogate_grad_sigma(z, sigma[c]) * sigma[c];
      }
    }
    for (std::size_t c = 0; c < C; ++c) {
      if (!std::isfinite(d_tau[c]) || !std::isfinite(d_log_sigma[c])) {
        throw NonFiniteGradient("non-finite gradient at class " + std::to_string(c));
      }
    }

    ++step_count;
    tau_moments.apply(tau, d_tau, step_count, config.learning_rate,
                      config.update_rule);
    sigma_moments.apply(log_sigma, d_log_sigma, step_count, config.learning_rate,
                        config.update_rule);
    for (auto& t : tau) t = std::clamp(t, 0.0, 1.0);
  }

  const auto [best_index, feasible] = select_best_iterate(trace, proxy);
  const TraceRecord& best = trace[best_index];

  FitResult result;
  result.thresholds_normalized = best.tau_hat;
  result.sigma = best.sigma;
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

}  // namespace trusthresh
