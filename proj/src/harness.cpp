#include "relearn/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "relearn/relcore/grounding.hpp"
#include "relearn/relcore/pddl.hpp"

#ifndef RELEARN_VERSION
#define RELEARN_VERSION "unknown"
#endif

namespace fs = std::filesystem;

namespace relearn {
namespace {

constexpr std::uint64_t kPolicyTag = 0x706f6c696379;
constexpr std::uint64_t kTaskTag = 0x7461736b73;
constexpr std::uint64_t kDemoTag = 0x64656d6f73;
constexpr std::uint64_t kEvalTag = 0x6576616c;

const std::pair<Method, const char*> kMethods[] = {
    {Method::kRandom, "random"},
    {Method::kGlib, "glib_l2"},
    {Method::kGlibDemos, "glib_l2_demos"},
    {Method::kOracleBfs, "oracle_bfs"},
    {Method::kOracleBfsDemos, "oracle_bfs_demos"},
    {Method::kOraclePtDemos, "oracle_pt_demos"},
};

std::size_t parse_count(const std::string& value, const std::string& key, const std::string& source) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    if (value.empty() || value[0] == '-' || value[0] == '+') throw std::invalid_argument(value);
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != value.size()) throw std::invalid_argument(source + ": " + key + " must be an unsigned integer, got '" + value + "'");
  return static_cast<std::size_t>(v);
}

std::string resolve_path(const std::string& value, const std::string& base_dir) {
  fs::path p(value);
  if (p.is_relative()) p = fs::path(base_dir) / p;
  return p.lexically_normal().string();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

// Total dissonance when every ground-truth operator has a learned
// counterpart, otherwise nothing.
std::optional<std::size_t> dissonance_if_complete(std::span<const Operator> ops, std::span<const Operator> gt) {
  std::vector<bool> covered(gt.size(), false);
  for (const Operator& op : ops) {
    if (auto g = match_operator(op, gt)) covered[*g] = true;
  }
  if (std::find(covered.begin(), covered.end(), false) != covered.end()) return std::nullopt;
  return total_dissonance(ops, gt);
}

std::unique_ptr<ExplorationPolicy> make_policy(Method m, const DomainBundle& bundle, const ExperimentConfig& cfg, Rng& rng,
                                               TraceLog* trace) {
  switch (m) {
    case Method::kRandom:
      return std::make_unique<RandomPolicy>(rng, trace);
    case Method::kGlib:
    case Method::kGlibDemos: {
      GlibOptions options;
      options.attempts_per_step = cfg.attempts;
      options.babble_budget.max_plan_length = cfg.planner.max_plan_length;
      options.babble_budget.time_limit = cfg.planner.time_limit;
      return std::make_unique<GlibPolicy>(*bundle.domain, rng, trace, options);
    }
    case Method::kOracleBfs:
    case Method::kOracleBfsDemos:
      return std::make_unique<OracleBfsPolicy>(rng, trace);
    case Method::kOraclePtDemos: {
      TargetingOptions options;
      options.budget = cfg.planner;
      return std::make_unique<PrecondTargetingPolicy>(bundle.domain->gt_operators, rng, trace, options);
    }
  }
  throw std::logic_error("unhandled method");
}

}  // namespace

std::string method_name(Method m) {
  for (const auto& [method, name] : kMethods) {
    if (method == m) return name;
  }
  throw std::logic_error("unhandled method");
}

Method parse_method(std::string_view name) {
  for (const auto& [method, id] : kMethods) {
    if (name == id) return method;
  }
  std::string known;
  for (const auto& [method, id] : kMethods) known += std::string(known.empty() ? "" : ", ") + id;
  throw std::invalid_argument("unknown method '" + std::string(name) + "' (expected one of " + known + ")");
}

bool uses_demos(Method m) {
  return m == Method::kGlibDemos || m == Method::kOracleBfsDemos || m == Method::kOraclePtDemos;
}

void ExperimentConfig::resolve(const BundleManifest& manifest) {
  if (!budget) budget = manifest.budget;
  if (!eval_interval) eval_interval = manifest.eval_interval;
  if (!horizon) horizon = manifest.horizon;
  if (*budget == 0) throw std::invalid_argument("budget must be positive");
  if (*eval_interval == 0 || *eval_interval > *budget) {
    throw std::invalid_argument("eval_interval must be in [1, budget]");
  }
  if (*horizon == 0) throw std::invalid_argument("horizon must be positive");
  if (attempts == 0) throw std::invalid_argument("attempts must be positive");
  planner.validate();
}

std::string ExperimentConfig::format() const {
  std::ostringstream out;
  out << "bundle = " << bundle << "\n";
  out << "method = " << method_name(method) << "\n";
  out << "seed = " << seed << "\n";
  if (budget) out << "budget = " << *budget << "\n";
  if (eval_interval) out << "eval_interval = " << *eval_interval << "\n";
  if (horizon) out << "horizon = " << *horizon << "\n";
  out << "attempts = " << attempts << "\n";
  out << "planner.max_expansions = " << planner.max_expansions << "\n";
  out << "planner.max_plan_length = " << planner.max_plan_length << "\n";
  out << "planner.time_limit_ms = " << planner.time_limit.count() << "\n";
  if (!output.empty()) out << "output = " << output << "\n";
  return out.str();
}

ExperimentConfig parse_experiment_config(std::string_view text, const std::string& source, const std::string& base_dir) {
  ExperimentConfig c;
  bool has_bundle = false;
  bool has_method = false;
  for (const auto& [key, value] : parse_key_values(text, source)) {
    if (key == "bundle") {
      c.bundle = resolve_path(value, base_dir);
      has_bundle = true;
    } else if (key == "method") {
      c.method = parse_method(value);
      has_method = true;
    } else if (key == "seed") {
      c.seed = parse_count(value, key, source);
    } else if (key == "budget") {
      c.budget = parse_count(value, key, source);
    } else if (key == "eval_interval") {
      c.eval_interval = parse_count(value, key, source);
    } else if (key == "horizon") {
      c.horizon = parse_count(value, key, source);
    } else if (key == "attempts") {
      c.attempts = parse_count(value, key, source);
    } else if (key == "planner.max_expansions") {
      c.planner.max_expansions = parse_count(value, key, source);
    } else if (key == "planner.max_plan_length") {
      c.planner.max_plan_length = parse_count(value, key, source);
    } else if (key == "planner.time_limit_ms") {
      c.planner.time_limit = std::chrono::milliseconds(parse_count(value, key, source));
    } else if (key == "output") {
      c.output = resolve_path(value, base_dir);
    } else {
      throw std::invalid_argument(source + ": unknown key '" + key + "'");
    }
  }
  if (!has_bundle) throw std::invalid_argument(source + ": missing 'bundle'");
  if (!has_method) throw std::invalid_argument(source + ": missing 'method'");
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  const std::string dir = fs::path(path).parent_path().string();
  return parse_experiment_config(read_file(path), path, dir.empty() ? "." : dir);
}

std::vector<TaskOutcome> evaluate_operators(std::span<const Operator> ops, const DomainBundle& bundle, std::size_t horizon,
                                            const SearchBudget& budget, std::uint64_t seed) {
  std::vector<TaskOutcome> out;
  for (std::size_t i = 0; i < bundle.test.size(); ++i) {
    const TaskContext& ctx = *bundle.test[i].context;
    Rng rng = derive_rng(seed, kEvalTag + i);
    TaskOutcome outcome{bundle.test[i].id, false, 0};
    PlanResult result = plan(ctx, ops, ctx.task().init, ctx.task().goal, budget, rng);
    if (result.found()) {
      outcome.plan_length = result.plan.size();
      if (result.plan.empty()) {
        outcome.success = holds(ctx.task().init, ctx.task().goal);
      } else {
        ExecutionResult exec = execute_plan(result.plan, Simulator(bundle.test[i].context), horizon);
        outcome.success = holds(exec.final_state, ctx.task().goal);
      }
    }
    out.push_back(std::move(outcome));
  }
  return out;
}

double success_rate(std::span<const TaskOutcome> outcomes) {
  if (outcomes.empty()) return 0.0;
  std::size_t n = 0;
  for (const TaskOutcome& o : outcomes) n += o.success ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(outcomes.size());
}

std::vector<std::size_t> evaluation_grid(std::size_t demo_steps, std::size_t interval, std::size_t budget) {
  if (interval == 0) throw std::invalid_argument("eval interval must be positive");
  std::vector<std::size_t> grid{std::min(demo_steps, budget)};
  for (std::size_t g = (grid.front() / interval + 1) * interval; g < budget; g += interval) grid.push_back(g);
  if (grid.back() != budget) grid.push_back(budget);
  return grid;
}

RunResult run_experiment(const ExperimentConfig& config, const DomainBundle& bundle) {
  RunResult result;
  result.config = config;
  result.config.resolve(bundle.manifest);
  const ExperimentConfig& cfg = result.config;
  result.bundle_name = bundle.manifest.name;
  const std::span<const Operator> gt = bundle.domain->gt_operators;
  const std::size_t budget = *cfg.budget;

  Rng policy_rng = derive_rng(cfg.seed, kPolicyTag);
  Rng task_rng = derive_rng(cfg.seed, kTaskTag);
  TraceLog trace;
  std::unique_ptr<ExplorationPolicy> policy = make_policy(cfg.method, bundle, cfg, policy_rng, &trace);
  OperatorLearner learner;
  std::vector<Operator> ops;
  std::size_t steps = 0;

  auto relearn = [&] {
    ops = learner.learn();
    policy->set_operators(ops);
    if (auto d = dissonance_if_complete(ops, gt)) result.dissonance_history.push_back(*d);
  };

  if (uses_demos(cfg.method)) {
    Rng demo_rng = derive_rng(cfg.seed, kDemoTag);
    const auto training = bundle.train_contexts();
    DemoSet demos = generate_demos(training, cfg.planner, demo_rng);
    learner.add(demos.transitions);
    result.demo_steps = demos.transitions.size();
    steps = result.demo_steps;
  }
  relearn();

  const std::vector<std::size_t> grid = evaluation_grid(result.demo_steps, *cfg.eval_interval, budget);
  std::size_t next_point = 0;
  std::optional<std::vector<Operator>> cached_ops;
  std::vector<TaskOutcome> cached_outcomes;
  auto evaluate_until = [&](std::size_t reached) {
    for (; next_point < grid.size() && grid[next_point] <= reached; ++next_point) {
      if (!cached_ops || *cached_ops != ops) {
        cached_outcomes = evaluate_operators(ops, bundle, *cfg.horizon, cfg.planner, cfg.seed);
        cached_ops = ops;
      }
      CurvePoint p;
      p.steps = grid[next_point];
      p.outcomes = cached_outcomes;
      p.success_rate = success_rate(p.outcomes);
      p.dissonance_total = dissonance_if_complete(ops, gt);
      result.curve.push_back(std::move(p));
    }
  };

  const auto training = bundle.train_contexts();
  std::vector<Simulator> sims;
  for (const auto& ctx : training) sims.emplace_back(ctx);
  std::ostringstream episodes;
  std::size_t idle = 0;
  while (steps < budget) {
    const std::size_t limit = std::min(*cfg.horizon, budget - steps);
    const std::size_t task = rotate_task(sims.size(), task_rng);
    trace.set_step(steps);
    std::vector<Transition> fresh;
    EpisodeLog log = run_episode(*policy, sims[task], limit, &fresh);
    ++result.episodes;
    // Points before the episode's last step see the operators it started with.
    evaluate_until(steps + log.steps_used - (log.steps_used > 0 ? 1 : 0));
    steps += log.steps_used;
    episodes << "# episode " << result.episodes << " task " << bundle.train[task].id << " steps " << log.steps_used
             << (log.reset_requested ? " reset" : "") << (log.converged ? " converged" : "") << "\n";
    episodes << format_episode_log(log);
    if (!fresh.empty()) {
      learner.add(fresh);
      relearn();
    }
    if (log.converged) {
      result.converged_at = steps;
      break;
    }
    idle = log.steps_used == 0 ? idle + 1 : 0;
    if (idle > 1000) throw std::logic_error("policy produced no actions for 1000 consecutive episodes");
  }
  // Converged runs carry their final operators to the end of the grid.
  evaluate_until(budget);
  result.final_operators = ops;
  result.trace = trace.text();
  result.episode_log = episodes.str();
  return result;
}

RunResult run_experiment(const ExperimentConfig& config) {
  DomainBundle bundle = load_bundle(config.bundle);
  require_valid(validate_bundle(bundle, config.planner));
  RunResult result = run_experiment(config, bundle);
  if (!config.output.empty()) write_run(result, bundle, config.output);
  return result;
}

std::string format_curve(std::span<const CurvePoint> curve) {
  std::ostringstream out;
  out << "steps,success_rate,dissonance_total\n";
  for (const CurvePoint& p : curve) {
    out << p.steps << "," << fixed(p.success_rate) << ",";
    if (p.dissonance_total) out << *p.dissonance_total;
    out << "\n";
  }
  return out.str();
}

void write_run(const RunResult& result, const DomainBundle& bundle, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path root(dir);
  write_text(root / "curve.csv", format_curve(result.curve));

  std::ostringstream outcomes;
  outcomes << "steps,task,success,plan_length\n";
  for (const CurvePoint& p : result.curve) {
    for (const TaskOutcome& o : p.outcomes) {
      outcomes << p.steps << "," << o.task << "," << (o.success ? 1 : 0) << "," << o.plan_length << "\n";
    }
  }
  write_text(root / "outcomes.csv", outcomes.str());

  std::ostringstream dissonance;
  dissonance << "update,dissonance_total\n";
  for (std::size_t i = 0; i < result.dissonance_history.size(); ++i) {
    dissonance << i << "," << result.dissonance_history[i] << "\n";
  }
  write_text(root / "dissonance.csv", dissonance.str());
  write_text(root / "trace.tsv", "step\tstage\taction\tgoal\tplan_length\tdiverged_at\tdissonance\n" + result.trace);
  write_text(root / "episodes.log", result.episode_log);
  write_text(root / "operators.pddl",
             serialize_operators(*bundle.domain, result.final_operators, bundle.domain->name + "-learned"));

  std::ostringstream manifest;
  manifest << "# Run manifest. The config below reproduces every file in this directory.\n";
  manifest << result.config.format();
  manifest << "domain = " << result.bundle_name << "\n";
  manifest << "code_version = " << code_version() << "\n";
  manifest << "demo_steps = " << result.demo_steps << "\n";
  manifest << "episodes = " << result.episodes << "\n";
  manifest << "converged_at = " << (result.converged_at ? std::to_string(*result.converged_at) : "-") << "\n";
  manifest << "final_success_rate = " << fixed(result.curve.empty() ? 0.0 : result.curve.back().success_rate) << "\n";
  write_text(root / "manifest.txt", manifest.str());
}

RunSummary read_run(const std::string& dir) {
  RunSummary run;
  run.dir = dir;
  const fs::path root(dir);
  std::map<std::string, std::string> manifest;
  try {
    manifest = parse_key_values(read_file((root / "manifest.txt").string()), (root / "manifest.txt").string());
    run.domain = manifest.at("domain");
    run.method = manifest.at("method");
    run.seed = std::stoull(manifest.at("seed"));
  } catch (const std::out_of_range&) {
    throw AggregateError(dir + ": manifest lacks domain, method or seed");
  } catch (const std::exception& e) {
    throw AggregateError(dir + ": " + e.what());
  }
  std::string curve;
  try {
    curve = read_file((root / "curve.csv").string());
  } catch (const std::exception& e) {
    throw AggregateError(dir + ": " + e.what());
  }
  std::istringstream in(curve);
  std::string line;
  std::getline(in, line);
  if (line != "steps,success_rate,dissonance_total") throw AggregateError(dir + ": unexpected curve header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != 3) throw AggregateError(dir + ": malformed curve row '" + line + "'");
    try {
      run.steps.push_back(std::stoull(cells[0]));
      run.success.push_back(std::stod(cells[1]));
      run.dissonance.push_back(cells[2].empty() ? std::nullopt : std::optional<double>(std::stod(cells[2])));
    } catch (const std::exception&) {
      throw AggregateError(dir + ": malformed curve row '" + line + "'");
    }
  }
  if (run.steps.empty()) throw AggregateError(dir + ": empty curve");
  return run;
}

std::vector<Series> aggregate_runs(std::span<const RunSummary> runs) {
  std::map<std::pair<std::string, std::string>, std::vector<const RunSummary*>> groups;
  for (const RunSummary& r : runs) groups[{r.domain, r.method}].push_back(&r);
  std::vector<Series> out;
  for (const auto& [key, members] : groups) {
    const RunSummary& first = *members.front();
    for (const RunSummary* r : members) {
      if (r->steps != first.steps) {
        throw AggregateError("evaluation grids differ between " + first.dir + " and " + r->dir + " (" + key.first +
                             ", " + key.second + ")");
      }
    }
    Series s{key.first, key.second, {}};
    const double n = static_cast<double>(members.size());
    for (std::size_t i = 0; i < first.steps.size(); ++i) {
      SeriesPoint p;
      p.steps = first.steps[i];
      p.runs = members.size();
      p.se_defined = members.size() > 1;
      auto stats = [&](auto value) {
        double sum = 0.0;
        for (const RunSummary* r : members) sum += value(*r);
        const double mean = sum / n;
        if (members.size() < 2) return std::pair{mean, 0.0};
        double sq = 0.0;
        for (const RunSummary* r : members) sq += (value(*r) - mean) * (value(*r) - mean);
        return std::pair{mean, std::sqrt(sq / (n - 1.0)) / std::sqrt(n)};
      };
      std::tie(p.mean_success, p.se_success) = stats([&](const RunSummary& r) { return r.success[i]; });
      const bool all_dissonance =
          std::all_of(members.begin(), members.end(), [&](const RunSummary* r) { return r->dissonance[i].has_value(); });
      if (all_dissonance) {
        auto [mean, se] = stats([&](const RunSummary& r) { return *r.dissonance[i]; });
        p.mean_dissonance = mean;
        p.se_dissonance = se;
      }
      s.points.push_back(p);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::string> find_runs(std::span<const std::string> paths) {
  std::vector<std::string> out;
  for (const std::string& p : paths) {
    if (!fs::is_directory(p)) throw AggregateError(p + ": not a directory");
    if (fs::exists(fs::path(p) / "manifest.txt") && fs::exists(fs::path(p) / "curve.csv")) {
      out.push_back(p);
      continue;
    }
    std::vector<std::string> found;
    for (const auto& entry : fs::recursive_directory_iterator(p)) {
      if (entry.is_directory() && fs::exists(entry.path() / "manifest.txt") && fs::exists(entry.path() / "curve.csv")) {
        found.push_back(entry.path().string());
      }
    }
    if (found.empty()) throw AggregateError(p + ": no run directories");
    std::sort(found.begin(), found.end());
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

void write_aggregate(std::span<const Series> series, const std::string& dir) {
  fs::create_directories(dir);
  std::ostringstream summary;
  summary << "domain,method,steps,runs,mean_success,se_success,mean_dissonance,se_dissonance,se_defined\n";
  for (const Series& s : series) {
    std::ostringstream dat;
    dat << "# " << s.domain << " " << s.method << "\n";
    dat << "# steps mean_success se_success lower upper mean_dissonance se_dissonance\n";
    for (const SeriesPoint& p : s.points) {
      summary << s.domain << "," << s.method << "," << p.steps << "," << p.runs << "," << fixed(p.mean_success) << ","
              << fixed(p.se_success) << "," << (p.mean_dissonance ? fixed(*p.mean_dissonance) : "") << ","
              << (p.mean_dissonance ? fixed(p.se_dissonance) : "") << "," << (p.se_defined ? 1 : 0) << "\n";
      dat << p.steps << " " << fixed(p.mean_success) << " " << fixed(p.se_success) << " "
          << fixed(p.mean_success - p.se_success) << " " << fixed(p.mean_success + p.se_success) << " "
          << (p.mean_dissonance ? fixed(*p.mean_dissonance) : "nan") << " "
          << (p.mean_dissonance ? fixed(p.se_dissonance) : "nan") << "\n";
    }
    write_text(fs::path(dir) / (s.domain + "__" + s.method + ".dat"), dat.str());
  }
  write_text(fs::path(dir) / "summary.csv", summary.str());
}

std::string code_version() { return RELEARN_VERSION; }

}  // namespace relearn
