// thresholdctl: fit / compare / oracle / eval over score files.
//
// A --config JSON file (same keys as the flags) is applied first, then
// command-line flags override it.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trusthresh/errors.hpp"
#include "trusthresh/io.hpp"

namespace {

using trusthresh::RunConfig;

// scratch for flags whose presence matters (enum names, per-method defaults)
struct FlagState {
  std::string config_path;
  std::string format;
  std::string method;
  std::string objective;
  std::string update_rule;
  std::string expr_file;
  std::vector<std::string> methods;
  std::vector<double> targets;
  double learning_rate = 0.0;
  int iterations = 0;
  double tau_init = 0.0;
  double width_init = 0.0;
  bool normalize = true;
  bool learn_widths = true;
};

void add_input_options(CLI::App* sub, RunConfig& rc, FlagState& st) {
  sub->add_option("-i,--input", rc.input_path, "score file (CSV or JSONL)");
  sub->add_option("--format", st.format, "input format: csv, jsonl, infer");
  sub->add_option("-c,--config", st.config_path,
                  "JSON config file; flags override its keys");
  sub->add_option("-o,--output", rc.output_path,
                  "report destination ('-' or absent: stdout)");
}

void add_expression_options(CLI::App* sub, RunConfig& rc, FlagState& st) {
  sub->add_option("-e,--expr", rc.expression,
                  "decision expression over subtask names");
  sub->add_option("--expr-file", st.expr_file, "file holding the expression");
  sub->add_option("--objective", st.objective,
                  "recall_at_precision (default) or micro_f1");
  sub->add_option("-t,--target", rc.target_precision,
                  "precision target in (0,1]");
}

void add_fit_options(CLI::App* sub, RunConfig& rc, FlagState& st) {
  sub->add_option("-m,--method", st.method,
                  "trusthresh (default), sglthresh, greedy, default");
  sub->add_option("--alpha", rc.alpha, "penalty strictness");
  sub->add_option("--lr", st.learning_rate, "learning rate");
  sub->add_option("--iterations", st.iterations, "gradient steps");
  sub->add_option("--tau-init", st.tau_init, "initial threshold");
  sub->add_option("--width-init", st.width_init,
                  "initial surrogate width (trusthresh)");
  sub->add_option("--sigma-init", rc.sigma_init,
                  "initial sigmoid steepness (sglthresh)");
  sub->add_flag("--normalize,!--no-normalize", st.normalize,
                "rank-normalize score columns first");
  sub->add_flag("--learn-widths,!--freeze-widths", st.learn_widths,
                "train the surrogate widths (trusthresh)");
  sub->add_option("--update-rule", st.update_rule, "adam (default) or sgd");
  sub->add_option("--tau", rc.tau, "constant threshold (default method)");
  sub->add_option("--grid-size", rc.grid_size, "grid resolution (greedy)");
  sub->add_option("--max-sweeps", rc.max_sweeps, "sweep limit (greedy)");
  sub->add_flag("--trace", rc.include_trace, "embed the iteration trace");
}

std::string read_expression_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw trusthresh::ConfigError("cannot open expression file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r' ||
                           text.back() == ' ' || text.back() == '\t')) {
    text.pop_back();
  }
  return text;
}

// flags parsed into scratch land in the config only when actually given
void fold_flags(CLI::App* sub, RunConfig& rc, FlagState& st) {
  using trusthresh::parse_input_format;
  using trusthresh::parse_method;
  using trusthresh::parse_objective;
  using trusthresh::parse_update_rule;

  const auto given = [sub](const std::string& name) {
    const CLI::Option* opt = sub->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };

  if (given("--format")) rc.input_format = parse_input_format(st.format);
  if (given("--objective")) rc.objective = parse_objective(st.objective);
  if (given("--method")) rc.method = parse_method(st.method);
  if (given("--update-rule")) rc.update_rule = parse_update_rule(st.update_rule);
  if (given("--lr")) rc.learning_rate = st.learning_rate;
  if (given("--iterations")) rc.iterations = st.iterations;
  if (given("--tau-init")) rc.tau_init = st.tau_init;
  if (given("--width-init")) rc.width_init = st.width_init;
  if (given("--normalize")) rc.normalize_scores = st.normalize;
  if (given("--learn-widths")) rc.learn_widths = st.learn_widths;
  if (given("--expr-file")) {
    if (given("--expr")) {
      throw trusthresh::ConfigError("--expr and --expr-file are exclusive");
    }
    rc.expression = read_expression_file(st.expr_file);
  }
  if (given("--methods")) {
    rc.methods.clear();
    for (const std::string& name : st.methods) {
      rc.methods.push_back(parse_method(name));
    }
  }
  if (given("--targets")) rc.targets = st.targets;
  if (rc.objective == trusthresh::Objective::micro_f1 && given("--target")) {
    throw trusthresh::ConfigError("micro_f1 does not take --target");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"per-subtask decision-threshold tuning"};
  app.require_subcommand(1);

  RunConfig rc;
  FlagState st;

  CLI::App* fit = app.add_subcommand(
      "fit", "tune thresholds with one method and write a report");
  add_input_options(fit, rc, st);
  add_expression_options(fit, rc, st);
  add_fit_options(fit, rc, st);

  CLI::App* compare = app.add_subcommand(
      "compare", "run several methods on one file, one report row each");
  add_input_options(compare, rc, st);
  add_expression_options(compare, rc, st);
  add_fit_options(compare, rc, st);
  compare->add_option("--methods", st.methods, "comma-separated method list")
      ->delimiter(',');
  compare->add_option("--targets", st.targets,
                      "comma-separated precision targets")
      ->delimiter(',');

  CLI::App* oracle = app.add_subcommand(
      "oracle", "exhaustive grid search (small instances only)");
  add_input_options(oracle, rc, st);
  add_expression_options(oracle, rc, st);
  oracle->add_option("--grid-size", rc.grid_size, "grid resolution per axis");

  CLI::App* eval = app.add_subcommand(
      "eval", "re-apply a report's thresholds to a score file");
  add_input_options(eval, rc, st);
  eval->add_option("-r,--report", rc.report_path, "report to re-apply")
      ->required();
  eval->add_option("-e,--expr", rc.expression,
                   "decision expression (default: the report's)");
  eval->add_option("-t,--target", rc.target_precision,
                   "precision target (default: the report's)");

  // config file first, flags on top: find --config before CLI11 runs
  std::string config_path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if ((arg == "--config" || arg == "-c") && i + 1 < argc) {
      config_path = argv[i + 1];
    } else if (arg.rfind("--config=", 0) == 0) {
      config_path = arg.substr(9);
    }
  }
  if (!config_path.empty()) {
    try {
      apply_config_file(rc, config_path);
    } catch (const trusthresh::Error& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  trusthresh::Command command = trusthresh::Command::fit;
  CLI::App* active = fit;
  if (app.got_subcommand(compare)) {
    command = trusthresh::Command::compare;
    active = compare;
  } else if (app.got_subcommand(oracle)) {
    command = trusthresh::Command::oracle;
    active = oracle;
  } else if (app.got_subcommand(eval)) {
    command = trusthresh::Command::eval;
    active = eval;
  }

  try {
    fold_flags(active, rc, st);
  } catch (const trusthresh::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (rc.input_path.empty()) {
    std::cerr << "config error: no input file (--input or config key)\n";
    return 2;
  }

  return trusthresh::run_command(command, rc);
}
