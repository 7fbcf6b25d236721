#include "relearn/domains.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include "relearn/learner.hpp"
#include "relearn/relcore/pddl.hpp"

namespace relearn {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::size_t to_count(const std::string& value, const std::string& key, const std::string& source) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != value.size() || value.empty() || value[0] == '-')
    throw BundleError(source + ": " + key + " must be a non-negative integer, got '" + value + "'");
  return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& value, const std::string& key, const std::string& source) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw BundleError(source + ": " + key + " must be true or false, got '" + value + "'");
}

std::vector<BundleTask> load_tasks(const fs::path& dir, const std::shared_ptr<const Domain>& domain) {
  if (!fs::is_directory(dir)) throw BundleError("missing task directory " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pddl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<BundleTask> out;
  for (const auto& f : files) {
    try {
      auto task = std::make_shared<const Task>(parse_problem(read_file(f.string()), domain));
      out.push_back({f.stem().string(), f.string(), std::make_shared<const TaskContext>(task)});
    } catch (const ParseError& e) {
      throw BundleError(f.string() + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " +
                        e.what());
    } catch (const ModelError& e) {
      throw BundleError(f.string() + ": " + e.what());
    }
  }
  return out;
}

// Effect signature: action, binding pattern and lifted effects of the
// canonical form.
auto signature(const Operator& op) {
  Operator c = canonical_learning_form(op);
  return std::make_tuple(c.action, c.action_binding, c.add_effects, c.delete_effects);
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::string_view text, const std::string& source) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(number);
    if (eq == std::string::npos) throw BundleError(where + ": expected 'key = value'");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw BundleError(where + ": empty key");
    if (!out.emplace(key, value).second) throw BundleError(where + ": duplicate key " + key);
  }
  return out;
}

BundleManifest parse_manifest(std::string_view text, const std::string& source) {
  BundleManifest m;
  const std::string min_len = "expect.min_plan_length.";
  const std::string requires_prefix = "expect.requires.";
  for (const auto& [key, value] : parse_key_values(text, source)) {
    if (key == "name") {
      m.name = value;
    } else if (key == "domain") {
      m.domain_file = value;
    } else if (key == "train") {
      m.train_dir = value;
    } else if (key == "test") {
      m.test_dir = value;
    } else if (key == "horizon") {
      m.horizon = to_count(value, key, source);
    } else if (key == "budget") {
      m.budget = to_count(value, key, source);
    } else if (key == "eval_interval") {
      m.eval_interval = to_count(value, key, source);
    } else if (key == "stand_in") {
      m.stand_in = to_bool(value, key, source);
    } else if (key == "expect.operators") {
      m.operators = to_count(value, key, source);
    } else if (key == "expect.max_ground_actions") {
      m.max_ground_actions = to_count(value, key, source);
    } else if (key == "expect.train_atoms_min") {
      m.train_atoms_min = to_count(value, key, source);
    } else if (key == "expect.train_atoms_max") {
      m.train_atoms_max = to_count(value, key, source);
    } else if (key.rfind(min_len, 0) == 0 && key.size() > min_len.size()) {
      m.min_plan_length[key.substr(min_len.size())] = to_count(value, key, source);
    } else if (key.rfind(requires_prefix, 0) == 0 && key.size() > requires_prefix.size()) {
      m.requires_action[key.substr(requires_prefix.size())] = value;
    } else {
      throw BundleError(source + ": unknown key " + key);
    }
  }
  if (m.name.empty()) throw BundleError(source + ": missing name");
  if (m.horizon == 0 || m.budget == 0 || m.eval_interval == 0)
    throw BundleError(source + ": horizon, budget and eval_interval must be positive");
  if (m.eval_interval > m.budget) throw BundleError(source + ": eval_interval exceeds budget");
  return m;
}

std::vector<std::shared_ptr<const TaskContext>> DomainBundle::train_contexts() const {
  std::vector<std::shared_ptr<const TaskContext>> out;
  for (const auto& t : train) out.push_back(t.context);
  return out;
}

std::vector<std::shared_ptr<const TaskContext>> DomainBundle::test_contexts() const {
  std::vector<std::shared_ptr<const TaskContext>> out;
  for (const auto& t : test) out.push_back(t.context);
  return out;
}

DomainBundle load_bundle(const std::string& root) {
  const fs::path base(root);
  const fs::path manifest_path = base / "manifest.txt";
  if (!fs::is_regular_file(manifest_path)) throw BundleError("no manifest.txt in " + root);
  DomainBundle b;
  b.root = root;
  b.manifest = parse_manifest(read_file(manifest_path.string()), manifest_path.string());
  const fs::path domain_path = base / b.manifest.domain_file;
  try {
    b.domain = std::make_shared<const Domain>(parse_domain(read_file(domain_path.string())));
  } catch (const ParseError& e) {
    throw BundleError(domain_path.string() + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) +
                      ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw BundleError(domain_path.string() + ": " + e.what());
  }
  b.train = load_tasks(base / b.manifest.train_dir, b.domain);
  b.test = load_tasks(base / b.manifest.test_dir, b.domain);
  if (b.train.empty()) throw BundleError(root + ": no training tasks");
  if (b.test.empty()) throw BundleError(root + ": no test tasks");
  return b;
}

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string ValidationReport::format() const {
  std::ostringstream out;
  for (const auto& c : checks) out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
  return out.str();
}

void require_valid(const ValidationReport& report) {
  if (report.ok()) return;
  std::string failed;
  for (const auto& c : report.checks) {
    if (!c.passed) failed += "\n  " + c.name + ": " + c.detail;
  }
  throw BundleError("bundle " + report.bundle + " rejected:" + failed);
}

ValidationReport validate_bundle(const DomainBundle& bundle, const SearchBudget& budget, std::uint64_t seed) {
  const BundleManifest& m = bundle.manifest;
  const Domain& domain = *bundle.domain;
  ValidationReport report;
  report.bundle = m.name;
  auto check = [&](std::string name, bool passed, std::string detail) {
    report.checks.push_back({std::move(name), passed, std::move(detail)});
  };
  Rng rng = derive_rng(seed, 0x76616c6964617465ULL);

  const std::size_t num_ops = domain.gt_operators.size();
  if (m.operators) {
    check("operators", num_ops == *m.operators,
          std::to_string(num_ops) + " ground-truth operators, expected " + std::to_string(*m.operators));
  }
  {
    std::set<decltype(signature(domain.gt_operators[0]))> seen;
    std::string clash;
    for (const auto& op : domain.gt_operators) {
      if (!seen.insert(signature(op)).second) clash += " " + op.name;
    }
    check("distinct-signatures", clash.empty(), clash.empty() ? "all effect signatures distinct" : "shared by" + clash);
  }

  std::map<std::string, const BundleTask*> by_id;
  std::size_t max_actions = 0;
  std::string max_task;
  for (const auto* group : {&bundle.train, &bundle.test}) {
    for (const auto& t : *group) {
      by_id[t.id] = &t;
      if (t.context->actions().size() > max_actions) {
        max_actions = t.context->actions().size();
        max_task = t.id;
      }
    }
  }
  if (m.max_ground_actions) {
    check("max-ground-actions", max_actions == *m.max_ground_actions,
          std::to_string(max_actions) + " in " + max_task + ", expected " + std::to_string(*m.max_ground_actions));
  }
  if (m.train_atoms_min || m.train_atoms_max) {
    const std::size_t lo = m.train_atoms_min.value_or(0);
    const std::size_t hi = m.train_atoms_max.value_or(static_cast<std::size_t>(-1));
    for (const auto& t : bundle.train) {
      const std::size_t n = t.context->atoms().size();
      check("train-atoms " + t.id, lo <= n && n <= hi,
            std::to_string(n) + " ground atoms, band [" + std::to_string(lo) + ", " +
                (m.train_atoms_max ? std::to_string(hi) : std::string("inf")) + "]");
    }
  }

  // Solvability, plan lengths and operator coverage.
  std::map<std::string, std::size_t> plan_length;
  std::vector<bool> used(num_ops, false);
  for (const auto* group : {&bundle.train, &bundle.test}) {
    const bool is_test = group == &bundle.test;
    for (const auto& t : *group) {
      const TaskContext& ctx = *t.context;
      PackedState s = ctx.pack(ctx.task().init);
      GroundGoal goal = ctx.compile_goal(ctx.task().goal);
      PlanResult r = plan(ctx, ctx.gt_model(), s, goal, budget, rng);
      if (!r.found()) {
        check("solvable " + t.id, false, r.status == PlanStatus::kBudget ? "planner budget exhausted" : "unreachable");
        continue;
      }
      check("solvable " + t.id, true, std::to_string(r.plan.size()) + " steps");
      plan_length[t.id] = r.plan.size();
      if (!is_test) continue;
      for (std::uint32_t a : r.plan.action_indices) {
        std::int32_t g = ctx.gt_model().select(s, a);
        if (g >= 0) used[ctx.gt_model().operators()[static_cast<std::size_t>(g)].op] = true;
        s = ctx.gt_model().predict(s, a);
      }
    }
  }
  {
    std::string unused;
    for (std::size_t i = 0; i < num_ops; ++i) {
      if (!used[i]) unused += " " + domain.gt_operators[i].name;
    }
    check("operator-coverage", unused.empty(),
          unused.empty() ? "every operator appears in a test plan" : "unused in test plans:" + unused);
  }

  for (const auto& [id, min_len] : m.min_plan_length) {
    auto it = plan_length.find(id);
    if (!by_id.count(id)) {
      check("min-plan-length " + id, false, "no such task");
    } else if (it == plan_length.end()) {
      check("min-plan-length " + id, false, "no plan found");
    } else {
      check("min-plan-length " + id, it->second >= min_len,
            std::to_string(it->second) + " steps, expected at least " + std::to_string(min_len));
    }
  }

  for (const auto& [id, action_name] : m.requires_action) {
    const std::string name = "necessity " + id;
    auto it = by_id.find(id);
    auto action = domain.find_action(action_name);
    if (it == by_id.end() || !action) {
      check(name, false, it == by_id.end() ? "no such task" : "no action " + action_name);
      continue;
    }
    const TaskContext& ctx = *it->second->context;
    std::vector<Operator> reduced;
    for (const auto& op : domain.gt_operators) {
      if (op.action != *action) reduced.push_back(op);
    }
    GroundModel model = ctx.compile(reduced);
    PackedState s = ctx.pack(ctx.task().init);
    GroundGoal goal = ctx.compile_goal(ctx.task().goal);
    if (!relaxed_reachable(model, s, goal)) {
      check(name, true, "unsolvable without " + action_name + " (relaxed)");
      continue;
    }
    PlanResult r = plan(ctx, model, s, goal, budget, rng);
    if (r.status == PlanStatus::kUnreachable) {
      check(name, true, "unsolvable without " + action_name);
    } else if (r.found()) {
      check(name, false, "still solvable without " + action_name + " in " + std::to_string(r.plan.size()) + " steps");
    } else {
      check(name, false, "inconclusive: planner budget exhausted without " + action_name);
    }
  }
  return report;
}

}  // namespace relearn
