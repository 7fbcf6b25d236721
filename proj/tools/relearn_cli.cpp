// Command-line front end: validate, run, aggregate, evaluate.

#include <iostream>

#include "CLI11.hpp"
#include "relearn/harness.hpp"
#include "relearn/relcore/pddl.hpp"

namespace {

int validate_cmd(const std::string& bundle_dir) {
  relearn::DomainBundle bundle = relearn::load_bundle(bundle_dir);
  relearn::ValidationReport report = relearn::validate_bundle(bundle);
  std::cout << report.format();
  std::cout << (report.ok() ? "bundle OK: " : "bundle REJECTED: ") << bundle.manifest.name
            << (bundle.manifest.stand_in ? " (stand-in)" : "") << "\n";
  return report.ok() ? 0 : 1;
}

int run_cmd(const std::string& config_path, const std::optional<std::uint64_t>& seed, const std::string& output) {
  relearn::ExperimentConfig config = relearn::load_experiment_config(config_path);
  if (seed) config.seed = *seed;
  if (!output.empty()) config.output = output;
  if (config.output.empty()) throw std::invalid_argument("no output directory (set 'output' or pass --out)");
  relearn::RunResult result = relearn::run_experiment(config);
  std::cout << relearn::format_curve(result.curve);
  std::cout << "wrote " << config.output << "\n";
  return 0;
}

int aggregate_cmd(const std::vector<std::string>& dirs, const std::string& output) {
  std::vector<relearn::RunSummary> runs;
  for (const std::string& dir : relearn::find_runs(dirs)) runs.push_back(relearn::read_run(dir));
  std::vector<relearn::Series> series = relearn::aggregate_runs(runs);
  relearn::write_aggregate(series, output);
  for (const relearn::Series& s : series) {
    const relearn::SeriesPoint& last = s.points.back();
    std::cout << s.domain << " " << s.method << ": " << last.runs << " runs, final success " << last.mean_success
              << " +- " << last.se_success << (last.se_defined ? "" : " (single run, error undefined)") << "\n";
  }
  std::cout << "wrote " << output << "\n";
  return 0;
}

int evaluate_cmd(const std::string& ops_path, const std::string& bundle_dir, std::optional<std::size_t> horizon,
                 std::uint64_t seed) {
  relearn::DomainBundle bundle = relearn::load_bundle(bundle_dir);
  std::vector<relearn::Operator> ops = relearn::parse_operators(relearn::read_file(ops_path), *bundle.domain);
  const std::size_t h = horizon.value_or(bundle.manifest.horizon);
  std::vector<relearn::TaskOutcome> outcomes = relearn::evaluate_operators(ops, bundle, h, {}, seed);
  for (const relearn::TaskOutcome& o : outcomes) {
    std::cout << (o.success ? "SOLVED " : "FAILED ") << o.task;
    if (o.plan_length > 0) std::cout << " (plan length " << o.plan_length << ")";
    std::cout << "\n";
  }
  std::cout << "success rate " << relearn::success_rate(outcomes) << "\n";
  const std::size_t d = relearn::total_dissonance(ops, bundle.domain->gt_operators);
  std::cout << "dissonance " << d << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator learning by active exploration"};
  app.require_subcommand(1);

  std::string bundle_dir;
  auto* validate = app.add_subcommand("validate", "Check a domain bundle against its manifest");
  validate->add_option("bundle", bundle_dir, "Bundle directory")->required();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string run_out;
  auto* run = app.add_subcommand("run", "Run one experiment from a config file");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--seed", seed, "Override the config's seed");
  run->add_option("--out", run_out, "Override the config's output directory");

  std::vector<std::string> run_dirs;
  std::string aggregate_out = "aggregate";
  auto* aggregate = app.add_subcommand("aggregate", "Mean and standard error over seeds");
  aggregate->add_option("dirs", run_dirs, "Run directories or directories containing runs")->required();
  aggregate->add_option("--out", aggregate_out, "Output directory")->capture_default_str();

  std::string ops_path;
  std::string eval_bundle;
  std::optional<std::size_t> horizon;
  std::uint64_t eval_seed = 0;
  auto* evaluate = app.add_subcommand("evaluate", "Success rate of an operator file on a bundle's test tasks");
  evaluate->add_option("operators", ops_path, "Operator file")->required();
  evaluate->add_option("bundle", eval_bundle, "Bundle directory")->required();
  evaluate->add_option("--horizon", horizon, "Execution step limit (default: the bundle's)");
  evaluate->add_option("--seed", eval_seed, "Planner seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*validate) return validate_cmd(bundle_dir);
    if (*run) return run_cmd(config_path, seed, run_out);
    if (*aggregate) return aggregate_cmd(run_dirs, aggregate_out);
    if (*evaluate) return evaluate_cmd(ops_path, eval_bundle, horizon, eval_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
