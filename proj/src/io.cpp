#include "trusthresh/io.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <utility>

#include "trusthresh/baselines.hpp"
#include "trusthresh/decision_expr.hpp"
#include "trusthresh/errors.hpp"
#include "trusthresh/normalization.hpp"
#include "trusthresh/oracle.hpp"
#include "trusthresh/surrogate.hpp"

namespace trusthresh {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string current;
  for (char ch : text) {
    if (ch == '\n') {
      if (!current.empty() && current.back() == '\r') current.pop_back();
      lines.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (!current.empty() && current.back() == '\r') current.pop_back();
  if (!current.empty()) lines.push_back(std::move(current));
  return lines;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

double parse_score_cell(const std::string& text, std::size_t row,
                        const std::string& column) {
  const std::string t = trim(text);
  if (t.empty()) throw NonNumericScore(row, column, text);
  char* end = nullptr;
  const double value = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) throw NonNumericScore(row, column, text);
  return value;
}

int parse_label_cell(const std::string& text, std::size_t line,
                     std::size_t column, std::size_t sample) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double value = t.empty() ? -1.0 : std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw ParseError(line, column, "label is not numeric: \"" + text + "\"");
  }
  if (value != 0.0 && value != 1.0) throw InvalidLabel(sample, value);
  return value == 1.0 ? 1 : 0;
}

InputFormat sniff_format(const std::string& path) {
  const auto dot = path.rfind('.');
  if (dot != std::string::npos) {
    const std::string ext = path.substr(dot + 1);
    if (ext == "csv") return InputFormat::csv;
    if (ext == "jsonl" || ext == "ndjson") return InputFormat::jsonl;
  }
  std::ifstream in(path, std::ios::binary);
  char ch = 0;
  while (in.get(ch)) {
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') continue;
    return ch == '{' ? InputFormat::jsonl : InputFormat::csv;
  }
  return InputFormat::csv;
}

LoadedData load_csv(const std::string& path) {
  const std::vector<std::string> lines = split_lines(read_file(path));
  if (lines.empty()) throw EmptyDataset("empty file: " + path);

  const std::vector<std::string> header = split_csv_row(lines[0]);
  std::vector<std::string> score_columns;
  std::vector<std::size_t> score_index;
  std::vector<std::pair<std::string, std::size_t>> class_columns;  // name, idx
  std::optional<std::size_t> label_index;
  for (std::size_t k = 0; k < header.size(); ++k) {
    const std::string& name = header[k];
    if (name == "label") {
      if (label_index) throw ParseError(1, k + 1, "duplicate label column");
      label_index = k;
    } else if (name.rfind("label_", 0) == 0) {
      class_columns.emplace_back(name.substr(6), k);
    } else {
      score_columns.push_back(name);
      score_index.push_back(k);
    }
  }
  if (label_index && !class_columns.empty()) {
    throw ParseError(1, *label_index + 1,
                     "mix of label and label_<class> columns");
  }
  if (!label_index && class_columns.empty()) {
    throw MissingLabelColumn(1, "no label or label_<class> column in header");
  }

  // Multi-label files must pair every score column with its label column.
  std::vector<std::size_t> class_label_index;
  if (!class_columns.empty()) {
    for (const std::string& name : score_columns) {
      bool found = false;
      for (const auto& [cls, idx] : class_columns) {
        if (cls == name) {
          class_label_index.push_back(idx);
          found = true;
          break;
        }
      }
      if (!found) {
        throw MissingLabelColumn(1, "no label_" + name +
                                        " column for score column '" + name + "'");
      }
    }
    for (const auto& [cls, idx] : class_columns) {
      bool found = false;
      for (const std::string& name : score_columns) found |= name == cls;
      if (!found) {
        throw ParseError(1, idx + 1,
                         "label_" + cls + " has no matching score column");
      }
    }
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::vector<int> class_labels;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const std::size_t line_no = l + 1;
    if (trim(lines[l]).empty()) {
      // tolerate blank padding at EOF only
      for (std::size_t rest = l; rest < lines.size(); ++rest) {
        if (!trim(lines[rest]).empty()) {
          throw ParseError(line_no, 1, "empty line inside the data block");
        }
      }
      break;
    }
    const std::vector<std::string> cells = split_csv_row(lines[l]);
    if (cells.size() != header.size()) {
      throw ParseError(line_no, cells.size(),
                       "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(score_columns.size());
    for (std::size_t k = 0; k < score_columns.size(); ++k) {
      row.push_back(parse_score_cell(cells[score_index[k]], line_no,
                                     score_columns[k]));
    }
    rows.push_back(std::move(row));
    const std::size_t sample = rows.size() - 1;
    if (label_index) {
      labels.push_back(parse_label_cell(cells[*label_index], line_no,
                                        *label_index + 1, sample));
    } else {
      for (std::size_t c = 0; c < class_label_index.size(); ++c) {
        class_labels.push_back(parse_label_cell(cells[class_label_index[c]],
                                                line_no, class_label_index[c] + 1,
                                                sample));
      }
    }
  }

  Matrix scores(rows.size(), score_columns.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (std::size_t i = 0; i < score_columns.size(); ++i) scores(j, i) = rows[j][i];
  }

  LoadedData data;
  if (label_index) {
    data.binary = build_dataset(score_columns, std::move(scores), std::move(labels));
  } else {
    data.multilabel = build_multilabel_dataset(score_columns, std::move(scores),
                                               std::move(class_labels));
  }
  return data;
}

int json_label_value(const ordered_json& v, std::size_t line) {
  if (!v.is_number()) {
    throw ParseError(line, 1, "label is not numeric: " + v.dump());
  }
  const double value = v.get<double>();
  if (value != 0.0 && value != 1.0) {
    throw ParseError(line, 1, "label must be 0 or 1, got " + v.dump());
  }
  return value == 1.0 ? 1 : 0;
}

LoadedData load_jsonl(const std::string& path) {
  const std::vector<std::string> lines = split_lines(read_file(path));

  std::vector<std::string> score_names;
  std::vector<std::string> class_names;
  bool multilabel = false;
  bool first = true;

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;

  for (std::size_t l = 0; l < lines.size(); ++l) {
    const std::size_t line_no = l + 1;
    if (trim(lines[l]).empty()) continue;

    ordered_json rec;
    try {
      rec = ordered_json::parse(lines[l]);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, e.byte, e.what());
    }
    if (!rec.is_object()) throw ParseError(line_no, 1, "record is not an object");
    if (!rec.contains("scores") || !rec["scores"].is_object()) {
      throw ParseError(line_no, 1, "record has no scores object");
    }
    const bool has_label = rec.contains("label");
    const bool has_labels = rec.contains("labels") && rec["labels"].is_object();
    if (!has_label && !has_labels) {
      throw MissingLabelColumn(line_no, "record has neither label nor labels");
    }

    const ordered_json& scores = rec["scores"];
    if (first) {
      for (const auto& [key, value] : scores.items()) {
        (void)value;
        score_names.push_back(key);
      }
      multilabel = !has_label;
      if (multilabel) {
        for (const std::string& name : score_names) {
          if (!rec["labels"].contains(name)) {
            throw MissingLabelColumn(line_no, "labels has no entry for '" + name + "'");
          }
        }
        if (rec["labels"].size() != score_names.size()) {
          throw InconsistentKeys(line_no, "labels keys do not match scores keys");
        }
        class_names = score_names;
      }
      first = false;
    } else {
      if (multilabel != !has_label) {
        throw InconsistentKeys(line_no, "mixed label and labels records");
      }
      if (scores.size() != score_names.size()) {
        throw InconsistentKeys(line_no, "scores keys differ from the first record");
      }
    }

    std::vector<double> row;
    row.reserve(score_names.size());
    for (const std::string& name : score_names) {
      if (!scores.contains(name)) {
        throw InconsistentKeys(line_no, "scores has no key '" + name + "'");
      }
      const ordered_json& v = scores[name];
      if (!v.is_number()) throw NonNumericScore(line_no, name, v.dump());
      row.push_back(v.get<double>());
    }
    rows.push_back(std::move(row));

    if (multilabel) {
      const ordered_json& rec_labels = rec["labels"];
      if (rec_labels.size() != class_names.size()) {
        throw InconsistentKeys(line_no, "labels keys differ from the first record");
      }
      for (const std::string& name : class_names) {
        if (!rec_labels.contains(name)) {
          throw InconsistentKeys(line_no, "labels has no key '" + name + "'");
        }
        labels.push_back(json_label_value(rec_labels[name], line_no));
      }
    } else {
      labels.push_back(json_label_value(rec["label"], line_no));
    }
  }

  if (rows.empty()) throw EmptyDataset("no records in " + path);

  Matrix scores(rows.size(), score_names.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (std::size_t i = 0; i < score_names.size(); ++i) scores(j, i) = rows[j][i];
  }

  LoadedData data;
  if (multilabel) {
    data.multilabel = build_multilabel_dataset(std::move(class_names),
                                               std::move(scores), std::move(labels));
  } else {
    data.binary = build_dataset(std::move(score_names), std::move(scores),
                                std::move(labels));
  }
  return data;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    const auto now = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(now - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

ordered_json value_map(const std::vector<std::string>& names,
                       const std::vector<double>& values) {
  ordered_json map = ordered_json::object();
  for (std::size_t i = 0; i < names.size() && i < values.size(); ++i) {
    map[names[i]] = values[i];
  }
  return map;
}

ordered_json metrics_json(double precision, double recall, double f1) {
  return {{"precision", precision}, {"recall", recall}, {"f1", f1}};
}

ordered_json knots_json(const std::vector<std::string>& names,
                        const std::vector<NormalizationMap>& maps) {
  ordered_json out = ordered_json::object();
  for (std::size_t i = 0; i < names.size() && i < maps.size(); ++i) {
    ordered_json knots = ordered_json::array();
    for (const auto& knot : maps[i].knots()) {
      knots.push_back({{"raw", knot.raw}, {"normalized", knot.normalized}});
    }
    out[names[i]] = std::move(knots);
  }
  return out;
}

ordered_json trace_json(const std::vector<TraceRecord>& trace) {
  ordered_json out = ordered_json::array();
  for (const auto& rec : trace) {
    ordered_json entry{{"loss", rec.loss},
                       {"precision", rec.precision},
                       {"recall", rec.recall},
                       {"f1", rec.f1},
                       {"tau_hat", rec.tau_hat}};
    if (!rec.widths.empty()) entry["widths"] = rec.widths;
    if (!rec.sigma.empty()) entry["sigma"] = rec.sigma;
    out.push_back(std::move(entry));
  }
  return out;
}

std::string update_rule_name(UpdateRule rule) {
  return rule == UpdateRule::adam ? "adam" : "sgd";
}

FitConfig make_fit_config(const RunConfig& rc) {
  FitConfig fc = FitConfig::for_objective(rc.objective);
  fc.target_precision = rc.target_precision;
  fc.alpha = rc.alpha;
  if (rc.learning_rate) fc.learning_rate = *rc.learning_rate;
  if (rc.iterations) fc.iterations = *rc.iterations;
  if (rc.tau_init) fc.tau_init = *rc.tau_init;
  if (rc.width_init) fc.width_init = *rc.width_init;
  fc.normalize_scores = rc.normalize_scores.value_or(true);
  fc.learn_widths = rc.learn_widths;
  fc.update_rule = rc.update_rule;
  return fc;
}

SglConfig make_sgl_config(const RunConfig& rc) {
  SglConfig sc = SglConfig::for_objective(rc.objective);
  sc.target_precision = rc.target_precision;
  sc.alpha = rc.alpha;
  if (rc.learning_rate) sc.learning_rate = *rc.learning_rate;
  if (rc.iterations) sc.iterations = *rc.iterations;
  if (rc.tau_init) sc.tau_init = *rc.tau_init;
  sc.sigma_init = rc.sigma_init;
  sc.normalize_scores = rc.normalize_scores.value_or(false);
  sc.update_rule = rc.update_rule;
  return sc;
}

ordered_json config_echo(const RunConfig& rc) {
  ordered_json echo = ordered_json::object();
  const bool recall_mode = rc.objective == Objective::recall_at_precision;
  if (recall_mode) echo["target_precision"] = rc.target_precision;
  switch (rc.method) {
    case Method::trusthresh: {
      const FitConfig fc = make_fit_config(rc);
      if (recall_mode) echo["alpha"] = fc.alpha;
      echo["learning_rate"] = fc.learning_rate;
      echo["iterations"] = fc.iterations;
      echo["tau_init"] = fc.tau_init;
      echo["width_init"] = fc.width_init;
      echo["normalize_scores"] = fc.normalize_scores;
      echo["learn_widths"] = fc.learn_widths;
      echo["update_rule"] = update_rule_name(fc.update_rule);
      break;
    }
    case Method::sglthresh: {
      const SglConfig sc = make_sgl_config(rc);
      if (recall_mode) echo["alpha"] = sc.alpha;
      echo["learning_rate"] = sc.learning_rate;
      echo["iterations"] = sc.iterations;
      echo["tau_init"] = sc.tau_init;
      echo["sigma_init"] = sc.sigma_init;
      echo["normalize_scores"] = sc.normalize_scores;
      echo["update_rule"] = update_rule_name(sc.update_rule);
      break;
    }
    case Method::greedy:
      echo["grid_size"] = rc.grid_size;
      echo["max_sweeps"] = rc.max_sweeps;
      break;
    case Method::defthresh:
      echo["tau"] = rc.tau;
      break;
  }
  return echo;
}

// Dispatches one (method, data) fit. Multi-label data requires micro_f1 and
// rules out the grid sweep, whose feasibility ordering has no F1 analogue.
FitResult dispatch_fit(const RunConfig& rc, const LoadedData& data,
                       const std::optional<DecisionExpr>& expr) {
  if (data.is_multilabel()) {
    const MultiLabelDataset& ds = *data.multilabel;
    switch (rc.method) {
      case Method::trusthresh:
        return fit_multilabel(ds, make_fit_config(rc));
      case Method::sglthresh:
        return sgl_thresh_fit_multilabel(ds, make_sgl_config(rc));
      case Method::defthresh:
        return def_thresh_multilabel(ds, rc.tau);
      case Method::greedy:
        throw ConfigError("the greedy sweep does not support micro_f1");
    }
  }
  const Dataset& ds = *data.binary;
  switch (rc.method) {
    case Method::trusthresh:
      return fit(ds, *expr, make_fit_config(rc));
    case Method::sglthresh:
      return sgl_thresh_fit(ds, *expr, make_sgl_config(rc));
    case Method::greedy: {
      GreedyConfig gc;
      gc.grid_size = rc.grid_size;
      gc.max_sweeps = rc.max_sweeps;
      return greedy_thresh(ds, *expr, gc, rc.target_precision);
    }
    case Method::defthresh:
      return def_thresh(ds, *expr, rc.tau, rc.target_precision);
  }
  throw ConfigError("unknown method");
}

// Loads data and resolves the decision expression for the configured
// objective, enforcing the objective/shape pairing rules.
struct PreparedRun {
  LoadedData data;
  std::optional<DecisionExpr> expr;
  std::vector<std::string> names;
};

PreparedRun prepare(const RunConfig& rc, bool expression_required) {
  PreparedRun prep;
  prep.data = load_dataset(rc.input_path, rc.input_format);

  if (rc.objective == Objective::micro_f1) {
    if (!rc.expression.empty()) {
      throw ConfigError("micro_f1 does not take a decision expression");
    }
    if (!prep.data.is_multilabel()) {
      // a single-column binary file doubles as a one-class instance
      const Dataset& ds = *prep.data.binary;
      if (ds.n_subtasks() != 1) {
        throw ConfigError(
            "micro_f1 needs label_<class> columns (or a single score column)");
      }
      prep.data.multilabel =
          build_multilabel_dataset(ds.subtask_names(), ds.scores(), ds.labels());
      prep.data.binary.reset();
    }
    prep.names = prep.data.multilabel->class_names();
    return prep;
  }

  if (prep.data.is_multilabel()) {
    throw ConfigError("recall_at_precision needs a single binary label column");
  }
  prep.names = prep.data.binary->subtask_names();
  if (rc.expression.empty()) {
    if (expression_required) {
      throw ConfigError("recall_at_precision needs a decision expression");
    }
    return prep;
  }
  prep.expr = parse_and_bind(rc.expression, prep.names);
  return prep;
}

void attach_fit_result(ordered_json& report, const RunConfig& rc,
                       const PreparedRun& prep, const FitResult& result) {
  report["thresholds_raw"] = value_map(prep.names, result.thresholds_raw);
  report["thresholds_normalized"] =
      value_map(prep.names, result.thresholds_normalized);
  if (!result.widths.empty()) report["widths"] = value_map(prep.names, result.widths);
  if (!result.sigma.empty()) report["sigma"] = value_map(prep.names, result.sigma);

  const bool normalized = rc.method == Method::trusthresh
                              ? rc.normalize_scores.value_or(true)
                              : rc.method == Method::sglthresh &&
                                    rc.normalize_scores.value_or(false);
  if (normalized) {
    if (prep.data.is_multilabel()) {
      const MultiLabelDataset& ds = *prep.data.multilabel;
      std::vector<NormalizationMap> maps;
      std::vector<double> column(ds.n_samples()), out(ds.n_samples());
      for (std::size_t c = 0; c < ds.n_classes(); ++c) {
        for (std::size_t s = 0; s < ds.n_samples(); ++s) column[s] = ds.scores()(s, c);
        maps.push_back(rank_normalize_column(column, out));
      }
      report["normalization"] = knots_json(prep.names, maps);
    } else {
      report["normalization"] =
          knots_json(prep.names, rank_normalize(*prep.data.binary).maps);
    }
  }

  report["metrics"] = metrics_json(result.precision, result.recall, result.f1);
  report["feasible"] = result.feasible;
  report["iterations_run"] = result.iterations_run;
  if (rc.include_trace) report["trace"] = trace_json(result.trace);
}

}  // namespace

Method parse_method(const std::string& text) {
  if (text == "trusthresh") return Method::trusthresh;
  if (text == "sglthresh") return Method::sglthresh;
  if (text == "greedy") return Method::greedy;
  if (text == "default") return Method::defthresh;
  throw ConfigError("unknown method: " + text);
}

Objective parse_objective(const std::string& text) {
  if (text == "recall_at_precision") return Objective::recall_at_precision;
  if (text == "micro_f1") return Objective::micro_f1;
  throw ConfigError("unknown objective: " + text);
}

InputFormat parse_input_format(const std::string& text) {
  if (text == "infer") return InputFormat::infer;
  if (text == "csv") return InputFormat::csv;
  if (text == "jsonl") return InputFormat::jsonl;
  throw ConfigError("unknown input format: " + text);
}

UpdateRule parse_update_rule(const std::string& text) {
  if (text == "adam") return UpdateRule::adam;
  if (text == "sgd") return UpdateRule::sgd;
  throw ConfigError("unknown update rule: " + text);
}

std::string method_name(Method method) {
  switch (method) {
    case Method::trusthresh: return "trusthresh";
    case Method::sglthresh: return "sglthresh";
    case Method::greedy: return "greedy";
    case Method::defthresh: return "default";
  }
  return "unknown";
}

std::string objective_name(Objective objective) {
  return objective == Objective::micro_f1 ? "micro_f1" : "recall_at_precision";
}

LoadedData load_dataset(const std::string& path, InputFormat format) {
  if (format == InputFormat::infer) format = sniff_format(path);
  return format == InputFormat::csv ? load_csv(path) : load_jsonl(path);
}

void apply_config_file(RunConfig& config, const std::string& path) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");

  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "input") config.input_path = value.get<std::string>();
      else if (key == "format") config.input_format = parse_input_format(value.get<std::string>());
      else if (key == "expression") config.expression = value.get<std::string>();
      else if (key == "method") config.method = parse_method(value.get<std::string>());
      else if (key == "objective") config.objective = parse_objective(value.get<std::string>());
      else if (key == "target_precision") config.target_precision = value.get<double>();
      else if (key == "alpha") config.alpha = value.get<double>();
      else if (key == "learning_rate") config.learning_rate = value.get<double>();
      else if (key == "iterations") config.iterations = value.get<int>();
      else if (key == "tau_init") config.tau_init = value.get<double>();
      else if (key == "width_init") config.width_init = value.get<double>();
      else if (key == "sigma_init") config.sigma_init = value.get<double>();
      else if (key == "normalize_scores") config.normalize_scores = value.get<bool>();
      else if (key == "learn_widths") config.learn_widths = value.get<bool>();
      else if (key == "update_rule") config.update_rule = parse_update_rule(value.get<std::string>());
      else if (key == "tau") config.tau = value.get<double>();
      else if (key == "grid_size") config.grid_size = value.get<int>();
      else if (key == "max_sweeps") config.max_sweeps = value.get<int>();
      else if (key == "trace") config.include_trace = value.get<bool>();
      else if (key == "output") config.output_path = value.get<std::string>();
      else if (key == "methods") {
        config.methods.clear();
        for (const auto& m : value) config.methods.push_back(parse_method(m.get<std::string>()));
      } else if (key == "targets") {
        config.targets = value.get<std::vector<double>>();
      } else {
        throw ConfigError("unknown config key: " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
}

RunOutcome run_fit(const RunConfig& config) {
  const Stopwatch clock;
  const PreparedRun prep = prepare(config, /*expression_required=*/true);
  const FitResult result = dispatch_fit(config, prep.data, prep.expr);

  ordered_json report;
  report["schema_version"] = 1;
  report["command"] = "fit";
  report["method"] = method_name(config.method);
  report["objective"] = objective_name(config.objective);
  report["input"] = config.input_path;
  if (!config.expression.empty()) report["expression"] = config.expression;
  report[prep.data.is_multilabel() ? "classes" : "subtasks"] = prep.names;
  report["config"] = config_echo(config);
  attach_fit_result(report, config, prep, result);
  report["wall_time_ms"] = clock.elapsed_ms();

  return {result.feasible ? 0 : 3, std::move(report)};
}

RunOutcome run_compare(const RunConfig& config) {
  const Stopwatch clock;
  if (config.methods.size() < 2) {
    throw ConfigError("compare needs at least 2 methods");
  }
  const bool recall_mode = config.objective == Objective::recall_at_precision;
  std::vector<double> targets = config.targets;
  if (targets.empty()) targets = {config.target_precision};
  for (double t : targets) {
    if (!(t > 0.0 && t <= 1.0)) {
      throw ConfigError("target_precision must lie in (0, 1]");
    }
  }

  const PreparedRun prep = prepare(config, /*expression_required=*/recall_mode);

  ordered_json rows = ordered_json::array();
  for (const Method method : config.methods) {
    const std::size_t n_targets = recall_mode ? targets.size() : 1;
    for (std::size_t t = 0; t < n_targets; ++t) {
      RunConfig rc = config;
      rc.method = method;
      if (recall_mode) rc.target_precision = targets[t];

      const Stopwatch row_clock;
      const FitResult result = dispatch_fit(rc, prep.data, prep.expr);
      ordered_json row;
      row["method"] = method_name(method);
      if (recall_mode) row["target_precision"] = targets[t];
      row["metrics"] = metrics_json(result.precision, result.recall, result.f1);
      row["feasible"] = result.feasible;
      row["thresholds_raw"] = value_map(prep.names, result.thresholds_raw);
      if (!result.sigma.empty()) row["sigma"] = value_map(prep.names, result.sigma);
      if (!result.widths.empty()) row["widths"] = value_map(prep.names, result.widths);
      row["iterations_run"] = result.iterations_run;
      row["wall_time_ms"] = row_clock.elapsed_ms();
      if (config.include_trace) row["trace"] = trace_json(result.trace);
      rows.push_back(std::move(row));
    }
  }

  ordered_json report;
  report["schema_version"] = 1;
  report["command"] = "compare";
  report["objective"] = objective_name(config.objective);
  report["input"] = config.input_path;
  if (!config.expression.empty()) report["expression"] = config.expression;
  report[prep.data.is_multilabel() ? "classes" : "subtasks"] = prep.names;
  if (recall_mode) report["targets"] = targets;
  report["rows"] = std::move(rows);
  report["wall_time_ms"] = clock.elapsed_ms();

  // feasibility is per-row data here, not process status
  return {0, std::move(report)};
}

RunOutcome run_oracle(const RunConfig& config) {
  const Stopwatch clock;
  const PreparedRun prep = prepare(config, /*expression_required=*/true);

  OracleResult result;
  if (prep.data.is_multilabel()) {
    result = grid_oracle_multilabel(*prep.data.multilabel, config.grid_size);
  } else {
    result = grid_oracle(*prep.data.binary, *prep.expr, config.grid_size,
                         config.target_precision, config.objective);
  }

  ordered_json report;
  report["schema_version"] = 1;
  report["command"] = "oracle";
  report["objective"] = objective_name(config.objective);
  report["input"] = config.input_path;
  if (!config.expression.empty()) report["expression"] = config.expression;
  report[prep.data.is_multilabel() ? "classes" : "subtasks"] = prep.names;
  if (config.objective == Objective::recall_at_precision) {
    report["target_precision"] = config.target_precision;
  }
  report["grid_size"] = result.grid_size;
  report["cells_evaluated"] = result.cells_evaluated;
  report["thresholds_raw"] = value_map(prep.names, result.thresholds);
  report["metrics"] = metrics_json(result.precision, result.recall, result.f1);
  report["feasible"] = result.feasible;
  report["wall_time_ms"] = clock.elapsed_ms();

  return {result.feasible ? 0 : 3, std::move(report)};
}

RunOutcome run_eval(const RunConfig& config) {
  const Stopwatch clock;
  if (config.report_path.empty()) {
    throw ConfigError("eval needs a report to re-apply (--report)");
  }
  ordered_json source;
  try {
    source = ordered_json::parse(read_file(config.report_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(1, e.byte, std::string("report: ") + e.what());
  }
  if (!source.is_object() || !source.contains("thresholds_raw") ||
      !source["thresholds_raw"].is_object()) {
    throw Error("report has no thresholds_raw object: " + config.report_path);
  }

  RunConfig effective = config;
  if (source.contains("objective") && source["objective"].is_string()) {
    effective.objective = parse_objective(source["objective"].get<std::string>());
  }
  if (effective.expression.empty() && source.contains("expression") &&
      source["expression"].is_string()) {
    effective.expression = source["expression"].get<std::string>();
  }
  double target = config.target_precision;
  if (source.contains("config") && source["config"].is_object() &&
      source["config"].contains("target_precision")) {
    target = source["config"]["target_precision"].get<double>();
  } else if (source.contains("target_precision")) {
    target = source["target_precision"].get<double>();
  }

  const PreparedRun prep = prepare(effective, /*expression_required=*/true);
  std::vector<double> thresholds;
  thresholds.reserve(prep.names.size());
  for (const std::string& name : prep.names) {
    if (!source["thresholds_raw"].contains(name)) {
      throw Error("report has no threshold for column '" + name + "'");
    }
    thresholds.push_back(source["thresholds_raw"][name].get<double>());
  }

  MetricReport m;
  bool feasible = true;
  if (prep.data.is_multilabel()) {
    const MultiLabelDataset& ds = *prep.data.multilabel;
    const std::size_t N = ds.n_samples();
    const std::size_t C = ds.n_classes();
    std::vector<int> predictions(N * C);
    for (std::size_t s = 0; s < N; ++s) {
      for (std::size_t c = 0; c < C; ++c) {
        predictions[s * C + c] = hsf(ds.scores()(s, c) - thresholds[c]);
      }
    }
    m = compute_metrics(ds.labels(), predictions);
  } else {
    m = evaluate_thresholds(*prep.data.binary, *prep.expr, thresholds);
    feasible = m.precision >= target;
  }

  ordered_json report;
  report["schema_version"] = 1;
  report["command"] = "eval";
  report["objective"] = objective_name(effective.objective);
  report["input"] = config.input_path;
  report["source_report"] = config.report_path;
  if (!effective.expression.empty()) report["expression"] = effective.expression;
  report[prep.data.is_multilabel() ? "classes" : "subtasks"] = prep.names;
  if (effective.objective == Objective::recall_at_precision) {
    report["target_precision"] = target;
  }
  report["thresholds_raw"] = value_map(prep.names, thresholds);
  report["metrics"] = metrics_json(m.precision, m.recall, m.f1);
  report["feasible"] = feasible;
  report["wall_time_ms"] = clock.elapsed_ms();

  return {feasible ? 0 : 3, std::move(report)};
}

void write_report(const ordered_json& report, const std::string& output_path) {
  const std::string text = report.dump(2) + "\n";
  if (output_path.empty() || output_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(output_path, std::ios::binary);
  if (!out) throw Error("cannot write " + output_path);
  out << text;
  if (!out) throw Error("failed writing " + output_path);
}

int run_command(Command command, const RunConfig& config) {
  try {
    RunOutcome outcome;
    switch (command) {
      case Command::fit: outcome = run_fit(config); break;
      case Command::compare: outcome = run_compare(config); break;
      case Command::oracle: outcome = run_oracle(config); break;
      case Command::eval: outcome = run_eval(config); break;
    }
    write_report(outcome.report, config.output_path);
    return outcome.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace trusthresh
