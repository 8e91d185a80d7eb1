#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "trusthresh/dataset.hpp"
#include "trusthresh/optimizer.hpp"

namespace trusthresh {

enum class InputFormat { infer, csv, jsonl };
enum class Method { trusthresh, sglthresh, greedy, defthresh };

// Exactly one of the two members is set, decided by the label shape of the
// file: a single `label` column/key loads as a binary Dataset, `label_<class>`
// columns (or a `labels` map) load as a MultiLabelDataset.
struct LoadedData {
  std::optional<Dataset> binary;
  std::optional<MultiLabelDataset> multilabel;

  bool is_multilabel() const { return multilabel.has_value(); }
};

// CSV: header row, one column per subtask plus `label` or `label_<class>`
// columns (located by name, not position); column order follows the header.
// JSONL: one object per line with a `scores` map plus `label` (0/1) or a
// `labels` map; column order follows the first record, and every later record
// must carry exactly the same keys. `infer` picks by file extension, falling
// back to a content sniff.
LoadedData load_dataset(const std::string& path,
                        InputFormat format = InputFormat::infer);

struct RunConfig {
  std::string input_path;
  InputFormat input_format = InputFormat::infer;
  std::string expression;  // decision text; empty (and forbidden) for micro_f1
  Method method = Method::trusthresh;
  Objective objective = Objective::recall_at_precision;
  double target_precision = 0.9;
  double alpha = 10.0;
  // unset -> per-method, per-objective defaults
  std::optional<double> learning_rate;
  std::optional<int> iterations;
  std::optional<double> tau_init;
  std::optional<double> width_init;
  double sigma_init = 50.0;
  std::optional<bool> normalize_scores;  // default: on for trusthresh, off for sglthresh
  bool learn_widths = true;
  UpdateRule update_rule = UpdateRule::adam;
  double tau = 0.5;     // constant-threshold method
  int grid_size = 101;  // greedy sweep + oracle
  int max_sweeps = 10;
  std::vector<Method> methods;  // compare (needs >= 2)
  std::vector<double> targets;  // compare; empty -> {target_precision}
  bool include_trace = false;
  std::string output_path;  // empty or "-" -> stdout
  std::string report_path;  // eval: report whose thresholds_raw are re-applied
};

// ConfigError on unknown names; the CLI maps that to exit code 2.
Method parse_method(const std::string& text);
Objective parse_objective(const std::string& text);
InputFormat parse_input_format(const std::string& text);
UpdateRule parse_update_rule(const std::string& text);
std::string method_name(Method method);
std::string objective_name(Objective objective);

// Reads a JSON document whose keys mirror the CLI flags and folds it into
// `config` as new defaults (command-line flags are applied on top by the CLI).
// Unknown keys raise ConfigError.
void apply_config_file(RunConfig& config, const std::string& path);

struct RunOutcome {
  int exit_code = 0;  // 0 feasible, 3 infeasible; errors are thrown instead
  nlohmann::ordered_json report;
};

// The subcommand bodies. Each loads the input, runs, and returns the report
// plus the feasibility exit code; validation problems throw ConfigError
// (exit 2) and input problems throw other Error subclasses (exit 1).
RunOutcome run_fit(const RunConfig& config);
RunOutcome run_compare(const RunConfig& config);
RunOutcome run_oracle(const RunConfig& config);
RunOutcome run_eval(const RunConfig& config);

// Serializes to config.output_path ("-"/empty -> stdout).
void write_report(const nlohmann::ordered_json& report,
                  const std::string& output_path);

// run + write_report + error-to-exit-code mapping (messages to stderr);
// the single entry point the CLI calls.
enum class Command { fit, compare, oracle, eval };
int run_command(Command command, const RunConfig& config);

}  // namespace trusthresh
