#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trusthresh/baselines.hpp"
#include "trusthresh/dataset.hpp"
#include "trusthresh/decision_expr.hpp"
#include "trusthresh/errors.hpp"
#include "trusthresh/io.hpp"
#include "trusthresh/normalization.hpp"
#include "trusthresh/optimizer.hpp"
#include "trusthresh/oracle.hpp"

namespace py = pybind11;
using namespace trusthresh;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

Matrix matrix_from(const DoubleArray& scores) {
  if (scores.ndim() != 2) {
    throw DimensionMismatch("scores must be a 2-D array (samples x subtasks)");
  }
  const auto view = scores.unchecked<2>();
  Matrix m(static_cast<std::size_t>(view.shape(0)),
           static_cast<std::size_t>(view.shape(1)));
  for (py::ssize_t r = 0; r < view.shape(0); ++r) {
    for (py::ssize_t c = 0; c < view.shape(1); ++c) {
      m(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = view(r, c);
    }
  }
  return m;
}

std::vector<int> labels_from_1d(const IntArray& labels) {
  if (labels.ndim() != 1) throw DimensionMismatch("labels must be a 1-D array");
  const auto view = labels.unchecked<1>();
  std::vector<int> out(static_cast<std::size_t>(view.shape(0)));
  for (py::ssize_t i = 0; i < view.shape(0); ++i) {
    out[static_cast<std::size_t>(i)] = static_cast<int>(view(i));
  }
  return out;
}

std::vector<int> labels_from_2d(const IntArray& labels) {
  if (labels.ndim() != 2) {
    throw DimensionMismatch("labels must be a 2-D array (samples x classes)");
  }
  const auto view = labels.unchecked<2>();
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(view.shape(0) * view.shape(1)));
  for (py::ssize_t r = 0; r < view.shape(0); ++r) {
    for (py::ssize_t c = 0; c < view.shape(1); ++c) {
      out.push_back(static_cast<int>(view(r, c)));
    }
  }
  return out;
}

py::dict metrics_dict(const MetricReport& m) {
  py::dict d;
  d["precision"] = m.precision;
  d["recall"] = m.recall;
  d["f1"] = m.f1;
  d["tp"] = m.tp;
  d["fp"] = m.fp;
  d["fn"] = m.fn;
  d["tn"] = m.tn;
  return d;
}

py::dict result_dict(const FitResult& r, bool include_trace) {
  py::dict d;
  d["thresholds_raw"] = r.thresholds_raw;
  d["thresholds_normalized"] = r.thresholds_normalized;
  if (!r.widths.empty()) d["widths"] = r.widths;
  if (!r.sigma.empty()) d["sigma"] = r.sigma;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["f1"] = r.f1;
  d["feasible"] = r.feasible;
  d["iterations_run"] = r.iterations_run;
  if (include_trace) {
    py::list trace;
    for (const TraceRecord& rec : r.trace) {
      py::dict entry;
      entry["loss"] = rec.loss;
      entry["precision"] = rec.precision;
      entry["recall"] = rec.recall;
      entry["f1"] = rec.f1;
      entry["tau_hat"] = rec.tau_hat;
      if (!rec.widths.empty()) entry["widths"] = rec.widths;
      if (!rec.sigma.empty()) entry["sigma"] = rec.sigma;
      trace.append(entry);
    }
    d["trace"] = trace;
  }
  return d;
}

py::dict oracle_dict(const OracleResult& r) {
  py::dict d;
  d["thresholds"] = r.thresholds;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["f1"] = r.f1;
  d["feasible"] = r.feasible;
  d["grid_size"] = r.grid_size;
  d["cells_evaluated"] = r.cells_evaluated;
  return d;
}

FitConfig fit_config(const std::string& objective, double target_precision,
                     double alpha, std::optional<double> learning_rate,
                     std::optional<int> iterations, std::optional<double> tau_init,
                     std::optional<double> width_init, bool normalize_scores,
                     bool learn_widths, const std::string& update_rule) {
  FitConfig config = FitConfig::for_objective(parse_objective(objective));
  config.target_precision = target_precision;
  config.alpha = alpha;
  if (learning_rate) config.learning_rate = *learning_rate;
  if (iterations) config.iterations = *iterations;
  if (tau_init) config.tau_init = *tau_init;
  if (width_init) config.width_init = *width_init;
  config.normalize_scores = normalize_scores;
  config.learn_widths = learn_widths;
  config.update_rule = parse_update_rule(update_rule);
  return config;
}

SglConfig sgl_config(const std::string& objective, double target_precision,
                     double alpha, std::optional<double> learning_rate,
                     std::optional<int> iterations, std::optional<double> tau_init,
                     double sigma_init, bool normalize_scores,
                     const std::string& update_rule) {
  SglConfig config = SglConfig::for_objective(parse_objective(objective));
  config.target_precision = target_precision;
  config.alpha = alpha;
  if (learning_rate) config.learning_rate = *learning_rate;
  if (iterations) config.iterations = *iterations;
  if (tau_init) config.tau_init = *tau_init;
  config.sigma_init = sigma_init;
  config.normalize_scores = normalize_scores;
  config.update_rule = parse_update_rule(update_rule);
  return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "decision-threshold tuning over boolean subtask expressions";

  // most-derived translators must be registered last so they run first
  py::register_exception<Error>(m, "ThresholdError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ThresholdConfigError", PyExc_ValueError);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](std::vector<std::string> names, const DoubleArray& scores,
                       const IntArray& labels) {
             return build_dataset(std::move(names), matrix_from(scores),
                                  labels_from_1d(labels));
           }),
           py::arg("subtask_names"), py::arg("scores"), py::arg("labels"))
      .def_property_readonly("n_samples", &Dataset::n_samples)
      .def_property_readonly("n_subtasks", &Dataset::n_subtasks)
      .def_property_readonly("subtask_names", &Dataset::subtask_names)
      .def_property_readonly("labels", &Dataset::labels)
      .def("__repr__", [](const Dataset& d) {
        return "Dataset(" + std::to_string(d.n_samples()) + " samples, " +
               std::to_string(d.n_subtasks()) + " subtasks)";
      });

  py::class_<MultiLabelDataset>(m, "MultiLabelDataset")
      .def(py::init([](std::vector<std::string> names, const DoubleArray& scores,
                       const IntArray& labels) {
             return build_multilabel_dataset(std::move(names), matrix_from(scores),
                                             labels_from_2d(labels));
           }),
           py::arg("class_names"), py::arg("scores"), py::arg("labels"))
      .def_property_readonly("n_samples", &MultiLabelDataset::n_samples)
      .def_property_readonly("n_classes", &MultiLabelDataset::n_classes)
      .def_property_readonly("class_names", &MultiLabelDataset::class_names)
      .def("__repr__", [](const MultiLabelDataset& d) {
        return "MultiLabelDataset(" + std::to_string(d.n_samples()) +
               " samples, " + std::to_string(d.n_classes()) + " classes)";
      });

  m.def(
      "load_dataset",
      [](const std::string& path, const std::string& format) -> py::object {
        LoadedData data = load_dataset(path, parse_input_format(format));
        if (data.is_multilabel()) return py::cast(std::move(*data.multilabel));
        return py::cast(std::move(*data.binary));
      },
      py::arg("path"), py::arg("format") = "infer",
      "Load a CSV or JSONL score file; returns Dataset or MultiLabelDataset by "
      "label shape.");

  m.def(
      "check_expression",
      [](const std::string& text, const std::vector<std::string>& names) {
        return parse_and_bind(text, names).to_string(names);
      },
      py::arg("expression"), py::arg("subtask_names"),
      "Parse an expression against the given names; returns its canonical form.");

  m.def(
      "evaluate",
      [](const Dataset& dataset, const std::string& expression,
         const std::vector<double>& thresholds) {
        const DecisionExpr expr = parse_and_bind(expression, dataset.subtask_names());
        return metrics_dict(evaluate_thresholds(dataset, expr, thresholds));
      },
      py::arg("dataset"), py::arg("expression"), py::arg("thresholds"),
      "Hard confusion metrics of the decision at fixed raw thresholds.");

  m.def(
      "rank_normalize",
      [](const Dataset& dataset) {
        RankNormalized result = rank_normalize(dataset);
        py::list knots;
        for (const NormalizationMap& map : result.maps) {
          py::list column;
          for (const NormalizationKnot& knot : map.knots()) {
            column.append(py::make_tuple(knot.raw, knot.normalized));
          }
          knots.append(column);
        }
        return py::make_tuple(py::cast(std::move(result.dataset)), knots);
      },
      py::arg("dataset"),
      "Midrank/N column normalization; returns (normalized_dataset, knots).");

  m.def(
      "fit",
      [](const Dataset& dataset, const std::string& expression,
         const std::string& objective, double target_precision, double alpha,
         std::optional<double> learning_rate, std::optional<int> iterations,
         std::optional<double> tau_init, std::optional<double> width_init,
         bool normalize_scores, bool learn_widths, const std::string& update_rule,
         bool include_trace) {
        const DecisionExpr expr = parse_and_bind(expression, dataset.subtask_names());
        const FitResult result =
            fit(dataset, expr,
                fit_config(objective, target_precision, alpha, learning_rate,
                           iterations, tau_init, width_init, normalize_scores,
                           learn_widths, update_rule));
        return result_dict(result, include_trace);
      },
      py::arg("dataset"), py::arg("expression"),
      py::arg("objective") = "recall_at_precision",
      py::arg("target_precision") = 0.9, py::arg("alpha") = 10.0,
      py::arg("learning_rate") = py::none(), py::arg("iterations") = py::none(),
      py::arg("tau_init") = py::none(), py::arg("width_init") = py::none(),
      py::arg("normalize_scores") = true, py::arg("learn_widths") = true,
      py::arg("update_rule") = "adam", py::arg("include_trace") = false,
      "Truncated-sine surrogate fit maximizing recall at the precision target.");

  m.def(
      "fit_multilabel",
      [](const MultiLabelDataset& dataset, std::optional<double> learning_rate,
         std::optional<int> iterations, std::optional<double> tau_init,
         std::optional<double> width_init, bool normalize_scores,
         bool learn_widths, const std::string& update_rule, bool include_trace) {
        const FitResult result = fit_multilabel(
            dataset, fit_config("micro_f1", 0.9, 10.0, learning_rate, iterations,
                                tau_init, width_init, normalize_scores,
                                learn_widths, update_rule));
        return result_dict(result, include_trace);
      },
      py::arg("dataset"), py::arg("learning_rate") = py::none(),
      py::arg("iterations") = py::none(), py::arg("tau_init") = py::none(),
      py::arg("width_init") = py::none(), py::arg("normalize_scores") = true,
      py::arg("learn_widths") = true, py::arg("update_rule") = "adam",
      py::arg("include_trace") = false,
      "Per-class thresholds maximizing pooled micro-F1.");

  m.def(
      "sgl_fit",
      [](const Dataset& dataset, const std::string& expression,
         const std::string& objective, double target_precision, double alpha,
         std::optional<double> learning_rate, std::optional<int> iterations,
         std::optional<double> tau_init, double sigma_init, bool normalize_scores,
         const std::string& update_rule, bool include_trace) {
        const DecisionExpr expr = parse_and_bind(expression, dataset.subtask_names());
        const FitResult result = sgl_thresh_fit(
            dataset, expr,
            sgl_config(objective, target_precision, alpha, learning_rate,
                       iterations, tau_init, sigma_init, normalize_scores,
                       update_rule));
        return result_dict(result, include_trace);
      },
      py::arg("dataset"), py::arg("expression"),
      py::arg("objective") = "recall_at_precision",
      py::arg("target_precision") = 0.9, py::arg("alpha") = 10.0,
      py::arg("learning_rate") = py::none(), py::arg("iterations") = py::none(),
      py::arg("tau_init") = py::none(), py::arg("sigma_init") = 50.0,
      py::arg("normalize_scores") = false, py::arg("update_rule") = "adam",
      py::arg("include_trace") = false,
      "Sigmoid-surrogate baseline sharing the loss and selection policy.");

  m.def(
      "sgl_fit_multilabel",
      [](const MultiLabelDataset& dataset, std::optional<double> learning_rate,
         std::optional<int> iterations, std::optional<double> tau_init,
         double sigma_init, bool normalize_scores, const std::string& update_rule,
         bool include_trace) {
        const FitResult result = sgl_thresh_fit_multilabel(
            dataset, sgl_config("micro_f1", 0.9, 10.0, learning_rate, iterations,
                                tau_init, sigma_init, normalize_scores,
                                update_rule));
        return result_dict(result, include_trace);
      },
      py::arg("dataset"), py::arg("learning_rate") = py::none(),
      py::arg("iterations") = py::none(), py::arg("tau_init") = py::none(),
      py::arg("sigma_init") = 50.0, py::arg("normalize_scores") = false,
      py::arg("update_rule") = "adam", py::arg("include_trace") = false);

  m.def(
      "greedy_fit",
      [](const Dataset& dataset, const std::string& expression,
         double target_precision, int grid_size, int max_sweeps) {
        const DecisionExpr expr = parse_and_bind(expression, dataset.subtask_names());
        GreedyConfig config;
        config.grid_size = grid_size;
        config.max_sweeps = max_sweeps;
        return result_dict(greedy_thresh(dataset, expr, config, target_precision),
                           false);
      },
      py::arg("dataset"), py::arg("expression"), py::arg("target_precision") = 0.9,
      py::arg("grid_size") = 101, py::arg("max_sweeps") = 10,
      "Grid coordinate-ascent baseline.");

  m.def(
      "default_fit",
      [](const Dataset& dataset, const std::string& expression, double tau,
         double target_precision) {
        const DecisionExpr expr = parse_and_bind(expression, dataset.subtask_names());
        return result_dict(def_thresh(dataset, expr, tau, target_precision), false);
      },
      py::arg("dataset"), py::arg("expression"), py::arg("tau") = 0.5,
      py::arg("target_precision") = 0.9,
      "Constant-threshold baseline (no optimization).");

  m.def(
      "default_fit_multilabel",
      [](const MultiLabelDataset& dataset, double tau) {
        return result_dict(def_thresh_multilabel(dataset, tau), false);
      },
      py::arg("dataset"), py::arg("tau") = 0.5);

  m.def(
      "grid_oracle",
      [](const Dataset& dataset, const std::string& expression, int grid_size,
         double target_precision, const std::string& objective) {
        const DecisionExpr expr = parse_and_bind(expression, dataset.subtask_names());
        return oracle_dict(grid_oracle(dataset, expr, grid_size, target_precision,
                                       parse_objective(objective)));
      },
      py::arg("dataset"), py::arg("expression"), py::arg("grid_size") = 101,
      py::arg("target_precision") = 0.9,
      py::arg("objective") = "recall_at_precision",
      "Exhaustive grid search; ground truth for small instances (n <= 3).");

  m.def(
      "grid_oracle_multilabel",
      [](const MultiLabelDataset& dataset, int grid_size) {
        return oracle_dict(grid_oracle_multilabel(dataset, grid_size));
      },
      py::arg("dataset"), py::arg("grid_size") = 51);
}
