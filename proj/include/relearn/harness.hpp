#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relearn/domains.hpp"
#include "relearn/explorer.hpp"

namespace relearn {

enum class Method { kRandom, kGlib, kGlibDemos, kOracleBfs, kOracleBfsDemos, kOraclePtDemos };

// Identifiers used in config files and output: random, glib_l2,
// glib_l2_demos, oracle_bfs, oracle_bfs_demos, oracle_pt_demos.
std::string method_name(Method m);
Method parse_method(std::string_view name);
bool uses_demos(Method m);

// Run description. Unset optional fields take the bundle manifest's values.
//
// Config file keys ("key = value", '#' comments):
//   bundle                     bundle directory, relative to the config file
//   method                     one of the method identifiers
//   seed                       unsigned integer
//   budget, eval_interval, horizon
//   attempts                   goal-babbling attempts per step
//   planner.max_expansions, planner.max_plan_length, planner.time_limit_ms
//   output                     run directory, relative to the config file
struct ExperimentConfig {
  std::string bundle;
  Method method = Method::kRandom;
  std::uint64_t seed = 0;
  std::optional<std::size_t> budget;
  std::optional<std::size_t> eval_interval;
  std::optional<std::size_t> horizon;
  std::size_t attempts = 10;
  SearchBudget planner{};
  std::string output;

  // Resolves optional fields against the manifest and checks the
  // invariants. Throws std::invalid_argument.
  void resolve(const BundleManifest& manifest);
  // "key = value" lines, keys in a fixed order.
  std::string format() const;
};

ExperimentConfig parse_experiment_config(std::string_view text, const std::string& source,
                                         const std::string& base_dir = ".");
ExperimentConfig load_experiment_config(const std::string& path);

struct TaskOutcome {
  std::string task;
  bool success = false;
  std::size_t plan_length = 0;  // 0 when no plan was found
};

struct CurvePoint {
  std::size_t steps = 0;
  double success_rate = 0.0;
  std::optional<std::size_t> dissonance_total;
  std::vector<TaskOutcome> outcomes;
};

// Plans every test task with `ops` and executes the plan in the simulator
// for at most `horizon` steps. Planner randomness depends only on `seed` and
// the task position, so the result is a function of the operator set.
std::vector<TaskOutcome> evaluate_operators(std::span<const Operator> ops, const DomainBundle& bundle,
                                            std::size_t horizon, const SearchBudget& budget, std::uint64_t seed);
double success_rate(std::span<const TaskOutcome> outcomes);

struct RunResult {
  ExperimentConfig config;  // resolved
  std::string bundle_name;
  std::size_t demo_steps = 0;
  std::vector<CurvePoint> curve;
  // Total dissonance after each learning update, demos first.
  std::vector<std::size_t> dissonance_history;
  // Step count at which the policy reported convergence.
  std::optional<std::size_t> converged_at;
  std::vector<Operator> final_operators;
  std::size_t episodes = 0;
  std::string trace;
  std::string episode_log;
};

// Evaluation points: demo_steps, every multiple of `interval` above it, and
// `budget`. Strictly increasing.
std::vector<std::size_t> evaluation_grid(std::size_t demo_steps, std::size_t interval, std::size_t budget);

// Explore, relearn after every episode and evaluate on the grid. The point at
// step g uses the operators learned from every episode finished by step g.
// The bundle is assumed valid.
RunResult run_experiment(const ExperimentConfig& config, const DomainBundle& bundle);

// Loads and validates the bundle, runs, and writes the artifacts.
RunResult run_experiment(const ExperimentConfig& config);

// Writes curve.csv, outcomes.csv, trace.tsv, episodes.log, operators.pddl,
// dissonance.csv and manifest.txt into `dir`, creating it when needed.
void write_run(const RunResult& result, const DomainBundle& bundle, const std::string& dir);

std::string format_curve(std::span<const CurvePoint> curve);

// Raised for unreadable runs and inconsistent groups.
class AggregateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunSummary {
  std::string dir;
  std::string domain;
  std::string method;
  std::uint64_t seed = 0;
  std::vector<std::size_t> steps;
  std::vector<double> success;
  std::vector<std::optional<double>> dissonance;
};

RunSummary read_run(const std::string& dir);

struct SeriesPoint {
  std::size_t steps = 0;
  std::size_t runs = 0;
  double mean_success = 0.0;
  double se_success = 0.0;
  std::optional<double> mean_dissonance;
  double se_dissonance = 0.0;
  bool se_defined = false;  // false for a single run; errors are then 0
};

struct Series {
  std::string domain;
  std::string method;
  std::vector<SeriesPoint> points;
};

// Groups runs by (domain, method); runs in a group must share the grid.
std::vector<Series> aggregate_runs(std::span<const RunSummary> runs);

// Expands each path to itself when it is a run directory, otherwise to the
// run directories below it, sorted.
std::vector<std::string> find_runs(std::span<const std::string> paths);

// Writes summary.csv and one "<domain>__<method>.dat" per series.
void write_aggregate(std::span<const Series> series, const std::string& dir);

// Code version recorded in run manifests.
std::string code_version();

}  // namespace relearn
