#include "relearn/explorer.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "relearn/relcore/pddl.hpp"

namespace relearn {

namespace {

std::string opt(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : "-"; }

std::string goal_text(const Task& task, std::span<const GroundLiteral> goal) {
  if (goal.empty()) return "-";
  std::string out;
  for (const auto& l : goal) out += to_string(task, l);
  return out;
}

// Narrower of two related types, nullopt when unrelated.
std::optional<TypeId> meet(const Domain& d, TypeId a, TypeId b) {
  if (d.is_subtype(a, b)) return a;
  if (d.is_subtype(b, a)) return b;
  return std::nullopt;
}

// Calls `f` with every injective assignment of objects to `types`, in
// lexicographic order, until `f` returns false.
void for_each_injective(const Task& task, std::span<const TypeId> types,
                        const std::function<bool(const std::vector<ObjectId>&)>& f) {
  std::vector<std::vector<ObjectId>> pools;
  for (TypeId t : types) pools.push_back(task.objects_of_type(t));
  std::vector<ObjectId> current(types.size());
  std::vector<bool> used(task.num_objects(), false);
  std::function<bool(std::size_t)> rec = [&](std::size_t i) {
    if (i == types.size()) return f(current);
    for (ObjectId o : pools[i]) {
      if (used[o]) continue;
      used[o] = true;
      current[i] = o;
      bool go_on = rec(i + 1);
      used[o] = false;
      if (!go_on) return false;
    }
    return true;
  };
  rec(0);
}

// Draws distinct objects for `types`, avoiding `taken`. Empty on failure.
std::optional<std::vector<ObjectId>> random_injective(const Task& task, std::span<const TypeId> types, Rng& rng) {
  std::vector<ObjectId> out;
  for (TypeId t : types) {
    std::vector<ObjectId> pool = task.objects_of_type(t);
    std::erase_if(pool, [&](ObjectId o) { return std::find(out.begin(), out.end(), o) != out.end(); });
    if (pool.empty()) return std::nullopt;
    out.push_back(pool[uniform_index(rng, pool.size())]);
  }
  return out;
}

Atom ground(const LiftedAtom& a, std::span<const ObjectId> binding) {
  Atom g;
  g.predicate = a.predicate;
  g.arity = a.arity;
  for (std::size_t i = 0; i < a.arity; ++i) g.args[i] = binding[a.vars[i]];
  return g;
}

GroundAction ground_action(const Domain& d, ActionId action, std::span<const VarId> args,
                           std::span<const ObjectId> binding) {
  GroundAction g;
  g.action = action;
  g.arity = static_cast<std::uint8_t>(d.actions[action].arity());
  for (std::size_t i = 0; i < g.arity; ++i) g.args[i] = binding[args[i]];
  return g;
}

bool same_signature(const Operator& a, const Operator& b) {
  return a.action == b.action && a.action_binding == b.action_binding && a.add_effects == b.add_effects &&
         a.delete_effects == b.delete_effects;
}

}  // namespace

// ---------------------------------------------------------------------------

void TraceLog::record(const Record& r) {
  std::ostringstream line;
  line << step_ << '\t' << r.stage << '\t' << (r.action.empty() ? "-" : r.action) << '\t'
       << (r.goal.empty() ? "-" : r.goal) << '\t' << opt(r.plan_length) << '\t' << opt(r.diverged_at) << '\t'
       << opt(r.dissonance) << '\n';
  text_ += line.str();
}

void ExplorationPolicy::set_operators(std::vector<Operator> ops) {
  ops_ = std::move(ops);
  ++ops_version_;
}

void ExplorationPolicy::begin_episode(const TaskContext& task, const State& /*init*/) {
  task_ = &task;
  if (compiled_for_.first != &task || compiled_for_.second != ops_version_) {
    learned_model_ = task.compile(ops_);
    compiled_for_ = {&task, ops_version_};
  }
}

void ExplorationPolicy::observe(const Transition& /*t*/) {
  if (trace_) trace_->advance();
}

GroundAction ExplorationPolicy::random_action() { return random_policy(*task_, rng_); }

void ExplorationPolicy::trace(TraceLog::Record r) {
  if (trace_) trace_->record(r);
}

GroundAction random_policy(const TaskContext& task, Rng& rng) {
  const auto& actions = task.actions();
  if (actions.size() == 0) throw ModelError("task " + task.task().name + " has no ground actions");
  return actions[uniform_index(rng, actions.size())];
}

PolicyDecision RandomPolicy::next(const State& /*state*/) {
  GroundAction a = random_action();
  trace({"random", to_string(task().task(), a)});
  return PolicyDecision::act(a);
}

// ---------------------------------------------------------------------------
// Goal babbling

GoalActionPair canonical_pair(const GoalActionPair& p) {
  const std::size_t g = p.num_goal_variables;
  std::vector<VarId> perm(g);
  std::iota(perm.begin(), perm.end(), 0);
  std::optional<GoalActionPair> best;
  do {
    // Goal variables follow `perm`; action-only variables are renumbered in
    // argument order after them.
    std::vector<int> remap(p.variable_types.size(), -1);
    for (std::size_t v = 0; v < g; ++v) remap[v] = perm[v];
    int next = static_cast<int>(g);
    for (VarId v : p.action_args) {
      if (remap[v] < 0) remap[v] = next++;
    }
    GoalActionPair c;
    c.num_goal_variables = g;
    c.action = p.action;
    c.variable_types.resize(p.variable_types.size());
    for (std::size_t v = 0; v < p.variable_types.size(); ++v) c.variable_types[remap[v]] = p.variable_types[v];
    for (auto l : p.goal) {
      for (std::size_t i = 0; i < l.atom.arity; ++i) l.atom.vars[i] = static_cast<VarId>(remap[l.atom.vars[i]]);
      c.goal.push_back(l);
    }
    std::sort(c.goal.begin(), c.goal.end());
    for (VarId v : p.action_args) c.action_args.push_back(static_cast<VarId>(remap[v]));
    if (!best || c < *best) best = std::move(c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return *best;
}

std::vector<GoalActionPair> enumerate_goal_action_pairs(const Domain& domain, std::size_t max_literals) {
  std::set<GoalActionPair> seen;

  std::function<void(GoalActionPair&, std::size_t)> add_action = [&](GoalActionPair& p, std::size_t) {
    for (ActionId a = 0; a < domain.actions.size(); ++a) {
      const ActionSchema& schema = domain.actions[a];
      GoalActionPair q = p;
      q.action = a;
      q.action_args.clear();
      std::function<void(std::size_t)> bind = [&](std::size_t i) {
        if (i == schema.arity()) {
          seen.insert(canonical_pair(q));
          return;
        }
        TypeId want = schema.parameter_types[i];
        for (VarId v = 0; v < q.num_goal_variables; ++v) {
          if (std::find(q.action_args.begin(), q.action_args.end(), v) != q.action_args.end()) continue;
          auto m = meet(domain, q.variable_types[v], want);
          if (!m) continue;
          TypeId saved = q.variable_types[v];
          q.variable_types[v] = *m;
          q.action_args.push_back(v);
          bind(i + 1);
          q.action_args.pop_back();
          q.variable_types[v] = saved;
        }
        q.variable_types.push_back(want);
        q.action_args.push_back(static_cast<VarId>(q.variable_types.size() - 1));
        bind(i + 1);
        q.action_args.pop_back();
        q.variable_types.pop_back();
      };
      bind(0);
    }
  };

  // Adds a literal whose arguments are distinct variables, each an existing
  // goal variable of compatible type or a new one.
  std::function<void(GoalActionPair&, std::size_t)> add_literal = [&](GoalActionPair& p, std::size_t remaining) {
    for (PredicateId pr = 0; pr < domain.predicates.size(); ++pr) {
      const PredicateSchema& schema = domain.predicates[pr];
      LiftedLiteral lit;
      lit.atom.predicate = pr;
      lit.atom.arity = static_cast<std::uint8_t>(schema.arity());
      std::function<void(std::size_t)> bind = [&](std::size_t i) {
        if (i == schema.arity()) {
          if (std::find(p.goal.begin(), p.goal.end(), lit) != p.goal.end()) return;
          p.goal.push_back(lit);
          add_action(p, 0);
          if (remaining > 1) add_literal(p, remaining - 1);
          p.goal.pop_back();
          return;
        }
        TypeId want = schema.parameter_types[i];
        for (VarId v = 0; v < p.num_goal_variables; ++v) {
          bool used_here = false;
          for (std::size_t j = 0; j < i; ++j) used_here |= lit.atom.vars[j] == v;
          if (used_here) continue;
          auto m = meet(domain, p.variable_types[v], want);
          if (!m) continue;
          TypeId saved = p.variable_types[v];
          p.variable_types[v] = *m;
          lit.atom.vars[i] = v;
          bind(i + 1);
          p.variable_types[v] = saved;
        }
        p.variable_types.push_back(want);
        ++p.num_goal_variables;
        lit.atom.vars[i] = static_cast<VarId>(p.num_goal_variables - 1);
        bind(i + 1);
        --p.num_goal_variables;
        p.variable_types.pop_back();
      };
      bind(0);
    }
  };

  if (max_literals > 0) {
    GoalActionPair empty;
    add_literal(empty, max_literals);
  }
  return {seen.begin(), seen.end()};
}

std::optional<GoalActionPair> NoveltyStore::sample(Rng& rng) {
  while (!pool_.empty()) {
    std::size_t i = uniform_index(rng, pool_.size());
    std::swap(pool_[i], pool_.back());
    GoalActionPair p = std::move(pool_.back());
    pool_.pop_back();
    if (sampled_.insert(canonical_pair(p)).second) return p;
  }
  return std::nullopt;
}

std::optional<GoalActionPair> glib_sample(NoveltyStore& store, Rng& rng) { return store.sample(rng); }

GlibPolicy::GlibPolicy(const Domain& domain, Rng& rng, TraceLog* trace, GlibOptions options)
    : GlibPolicy(NoveltyStore(enumerate_goal_action_pairs(domain)), rng, trace, options) {}

GlibPolicy::GlibPolicy(NoveltyStore store, Rng& rng, TraceLog* trace, GlibOptions options)
    : ExplorationPolicy(rng, trace), options_(options), store_(std::move(store)) {
  if (options_.attempts_per_step == 0) throw std::invalid_argument("GLIB needs at least one babble attempt");
  options_.babble_budget.validate();
}

void GlibPolicy::begin_episode(const TaskContext& task, const State& init) {
  ExplorationPolicy::begin_episode(task, init);
  plan_.reset();
  follow_.reset();
  awaiting_.reset();
}

PolicyDecision GlibPolicy::next(const State& state) {
  const Task& t = task().task();
  if (plan_) {
    if (plan_pos_ < plan_->size()) {
      awaiting_ = plan_pos_;
      const GroundAction a = plan_->steps[plan_pos_++];
      trace({"plan-step", to_string(t, a), goal_text_, plan_->size()});
      return PolicyDecision::act(a);
    }
    GroundAction a = *follow_;
    plan_.reset();
    follow_.reset();
    trace({"follow", to_string(t, a), goal_text_});
    return PolicyDecision::act(a);
  }
  if (exhausted_ || ops_.empty()) {
    GroundAction a = random_action();
    trace({exhausted_ ? "exhausted" : "random", to_string(t, a)});
    return PolicyDecision::act(a);
  }
  const PackedState packed = task().pack(state);
  for (std::size_t attempt = 0; attempt < options_.attempts_per_step; ++attempt) {
    std::optional<GoalActionPair> pair = store_.sample(rng_);
    if (!pair) {
      exhausted_ = true;
      break;
    }
    auto objects = random_injective(t, pair->variable_types, rng_);
    if (!objects) continue;
    std::vector<GroundLiteral> goal;
    for (const auto& l : pair->goal) goal.push_back({ground(l.atom, *objects), l.positive});
    GroundGoal compiled = task().compile_goal(goal);
    if (compiled.unsatisfiable) continue;
    PlanResult r = plan(task(), learned_model(), packed, compiled, options_.babble_budget, rng_);
    if (!r.found()) continue;
    plan_ = std::move(r.plan);
    plan_pos_ = 0;
    follow_ = ground_action(task().domain(), pair->action, pair->action_args, *objects);
    goal_text_ = goal_text(t, goal);
    trace({"babble", "", goal_text_, plan_->size()});
    return next(state);
  }
  GroundAction a = random_action();
  trace({exhausted_ ? "exhausted" : "fallback", to_string(t, a)});
  return PolicyDecision::act(a);
}

void GlibPolicy::observe(const Transition& t) {
  if (awaiting_ && plan_) {
    const std::size_t i = *awaiting_;
    if (t.next_state != plan_->trajectory[i + 1]) {
      trace({"diverged", to_string(task().task(), t.action), goal_text_, plan_->size(), i});
      plan_.reset();
      follow_.reset();
    }
  }
  awaiting_.reset();
  ExplorationPolicy::observe(t);
}

// ---------------------------------------------------------------------------
// Oracle-BFS

std::vector<std::uint32_t> mismatching_actions(const GroundModel& learned, const GroundModel& gt,
                                               const PackedState& s) {
  // Actions with no applicable operator in either model are no-ops in both.
  std::vector<std::uint32_t> ops, candidates;
  learned.applicable(s, ops);
  for (std::uint32_t i : ops) candidates.push_back(learned.operators()[i].action);
  ops.clear();
  gt.applicable(s, ops);
  for (std::uint32_t i : ops) candidates.push_back(gt.operators()[i].action);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::vector<std::uint32_t> out;
  for (std::uint32_t a : candidates) {
    if (learned.predict(s, a) != gt.predict(s, a)) out.push_back(a);
  }
  return out;
}

OracleBfsChoice oracle_bfs_policy(const TaskContext& task, const GroundModel& learned, const PackedState& state,
                                  Rng& rng, const OracleBfsOptions& options) {
  const GroundModel& gt = task.gt_model();
  std::vector<std::uint32_t> here = mismatching_actions(learned, gt, state);
  if (!here.empty()) return {here[uniform_index(rng, here.size())], BfsStage::kCurrentMismatch};

  const std::size_t n = task.actions().size();
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  struct Node {
    PackedState state;
    std::int64_t first;
  };
  std::vector<Node> frontier{{state, -1}};
  std::unordered_set<PackedState, PackedStateHash> visited{state};
  for (std::size_t depth = 1; depth <= options.max_depth; ++depth) {
    std::vector<Node> next_frontier;
    for (const Node& node : frontier) {
      // Partial Fisher-Yates: the first k entries are a uniform sample
      // without replacement whatever the current order is.
      const std::size_t k = std::min(options.neighbors, n);
      for (std::size_t i = 0; i < k; ++i) std::swap(order[i], order[i + uniform_index(rng, n - i)]);
      for (std::size_t i = 0; i < k; ++i) {
        const std::uint32_t a = order[i];
        PackedState child = gt.predict(node.state, a);
        if (!visited.insert(child).second) continue;
        const std::int64_t first = node.first < 0 ? a : node.first;
        if (!mismatching_actions(learned, gt, child).empty())
          return {static_cast<std::uint32_t>(first), BfsStage::kSearch};
        next_frontier.push_back({std::move(child), first});
      }
    }
    frontier = std::move(next_frontier);
  }
  return {static_cast<std::uint32_t>(uniform_index(rng, n)), BfsStage::kRandom};
}

PolicyDecision OracleBfsPolicy::next(const State& state) {
  OracleBfsChoice c = oracle_bfs_policy(task(), learned_model(), task().pack(state), rng_, options_);
  const GroundAction& a = task().actions()[c.action];
  static constexpr const char* kStage[] = {"mismatch", "bfs", "random"};
  trace({kStage[static_cast<int>(c.stage)], to_string(task().task(), a)});
  return PolicyDecision::act(a);
}

// ---------------------------------------------------------------------------
// Demonstrations

DemoSet generate_demos(std::span<const std::shared_ptr<const TaskContext>> training, const SearchBudget& budget,
                       Rng& rng) {
  if (training.empty()) throw std::invalid_argument("demonstrations need at least one training task");
  const Domain& domain = training.front()->domain();
  DemoSet demos;
  for (const Operator& op : domain.gt_operators) {
    std::optional<Transition> found;
    for (const auto& ctx : training) {
      const Task& task = ctx->task();
      const PackedState init = ctx->pack(task.init);
      Simulator sim(ctx);
      for_each_injective(task, op.parameter_types, [&](const std::vector<ObjectId>& binding) {
        std::vector<GroundLiteral> goal;
        for (const auto& l : op.preconditions) goal.push_back({ground(l.atom, binding), l.positive});
        GroundGoal compiled = ctx->compile_goal(goal);
        if (compiled.unsatisfiable || !relaxed_reachable(ctx->gt_model(), init, compiled)) return true;
        PlanResult r = plan(*ctx, ctx->gt_model(), init, compiled, budget, rng);
        if (!r.found()) return true;
        PackedState s = init;
        for (std::uint32_t a : r.plan.action_indices) s = sim.step(s, a);
        Transition t = sim.step(ctx->unpack(s), ground_action(domain, op.action, op.action_binding, binding));
        if (t.is_noop()) return true;
        found = std::move(t);
        return false;
      });
      if (found) break;
    }
    if (!found) throw ModelError("operator " + op.name + " cannot be demonstrated from any training task");
    demos.transitions.push_back(std::move(*found));
  }
  return demos;
}

// ---------------------------------------------------------------------------
// Precondition comparison

std::optional<std::size_t> match_operator(const Operator& learned, std::span<const Operator> gt) {
  const Operator l = canonical_learning_form(learned);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (same_signature(l, canonical_learning_form(gt[i]))) return i;
  }
  return std::nullopt;
}

PreconditionDiff precondition_diff(const Operator& learned, const Operator& gt) {
  const Operator l = canonical_learning_form(learned);
  const Operator g = canonical_learning_form(gt);
  if (!same_signature(l, g)) throw ModelError("operator " + learned.name + " has no matching effect signature");
  PreconditionDiff d;
  std::set_difference(l.preconditions.begin(), l.preconditions.end(), g.preconditions.begin(),
                      g.preconditions.end(), std::back_inserter(d.stronger));
  std::set_difference(g.preconditions.begin(), g.preconditions.end(), l.preconditions.begin(),
                      l.preconditions.end(), std::back_inserter(d.weaker));
  return d;
}

std::vector<PreconditionDiff> diff_all(std::span<const Operator> learned, std::span<const Operator> gt) {
  std::vector<Operator> canonical_gt;
  for (const auto& g : gt) canonical_gt.push_back(canonical_learning_form(g));
  std::vector<PreconditionDiff> out;
  for (std::size_t i = 0; i < learned.size(); ++i) {
    const Operator l = canonical_learning_form(learned[i]);
    for (std::size_t j = 0; j < canonical_gt.size(); ++j) {
      if (!same_signature(l, canonical_gt[j])) continue;
      PreconditionDiff d = precondition_diff(l, canonical_gt[j]);
      d.learned_index = i;
      d.gt_index = j;
      out.push_back(std::move(d));
      break;
    }
  }
  return out;
}

std::size_t total_dissonance(std::span<const Operator> learned, std::span<const Operator> gt) {
  std::size_t total = 0;
  for (const auto& d : diff_all(learned, gt)) total += d.dissonance();
  return total;
}

std::vector<DissonantGoal> dissonant_goals(const PreconditionDiff& diff, const Operator& gt, const Operator& learned,
                                           const TaskContext& task, Rng& rng,
                                           const std::set<std::vector<GroundLiteral>>& done) {
  const Domain& domain = task.domain();
  const Operator g = canonical_learning_form(gt);
  const Operator l = canonical_learning_form(learned);
  std::vector<TypeId> types = g.parameter_types;
  for (std::size_t v = 0; v < types.size() && v < l.parameter_types.size(); ++v) {
    auto m = meet(domain, types[v], l.parameter_types[v]);
    if (!m) return {};
    types[v] = *m;
  }

  // Index subsets of size 1..3, each family's differing literals.
  auto subsets = [](std::size_t n) {
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t k = 1; k <= std::min<std::size_t>(3, n); ++k) {
      std::vector<bool> mask(n, false);
      std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(k), true);
      do {
        std::vector<std::size_t> s;
        for (std::size_t i = 0; i < n; ++i) {
          if (mask[i]) s.push_back(i);
        }
        out.push_back(std::move(s));
      } while (std::prev_permutation(mask.begin(), mask.end()));
    }
    return out;
  };
  const auto stronger_sets = subsets(diff.stronger.size());
  const auto weaker_sets = subsets(diff.weaker.size());

  std::vector<DissonantGoal> out;
  std::set<std::vector<GroundLiteral>> emitted;
  auto emit = [&](const std::vector<LiftedLiteral>& base, const std::vector<LiftedLiteral>& differing,
                  const std::vector<std::size_t>& subset, bool stronger, const std::vector<ObjectId>& binding) {
    std::vector<GroundLiteral> lits;
    for (const auto& x : base) {
      if (std::find_if(subset.begin(), subset.end(), [&](std::size_t i) { return differing[i] == x; }) !=
          subset.end())
        continue;
      lits.push_back({ground(x.atom, binding), x.positive});
    }
    for (std::size_t i : subset) lits.push_back({ground(differing[i].atom, binding), !differing[i].positive});
    std::sort(lits.begin(), lits.end());
    lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
    for (std::size_t i = 0; i + 1 < lits.size(); ++i) {
      if (lits[i].atom == lits[i + 1].atom) return;  // both polarities
    }
    for (const auto& x : lits) {
      if (x.positive && !task.atoms().id(x.atom)) return;
    }
    if (done.count(lits) || !emitted.insert(lits).second) return;
    out.push_back({std::move(lits), binding, subset.size(), stronger});
  };

  for_each_injective(task.task(), types, [&](const std::vector<ObjectId>& binding) {
    for (const auto& s : stronger_sets) emit(g.preconditions, diff.stronger, s, true, binding);
    for (const auto& s : weaker_sets) emit(l.preconditions, diff.weaker, s, false, binding);
    return true;
  });
  shuffle(out, rng);
  std::stable_sort(out.begin(), out.end(),
                   [](const DissonantGoal& a, const DissonantGoal& b) { return a.violated > b.violated; });
  return out;
}

// ---------------------------------------------------------------------------
// Precondition targeting

PrecondTargetingPolicy::PrecondTargetingPolicy(std::vector<Operator> gt, Rng& rng, TraceLog* trace,
                                               TargetingOptions options)
    : ExplorationPolicy(rng, trace), gt_(std::move(gt)), options_(options) {
  if (options_.max_plan_attempts == 0) throw std::invalid_argument("targeting needs at least one plan attempt");
  options_.budget.validate();
}

void PrecondTargetingPolicy::set_operators(std::vector<Operator> ops) {
  ExplorationPolicy::set_operators(std::move(ops));
  diffs_ = diff_all(ops_, gt_);
  dissonance_ = 0;
  for (const auto& d : diffs_) dissonance_ += d.dissonance();
}

void PrecondTargetingPolicy::begin_episode(const TaskContext& task, const State& init) {
  ExplorationPolicy::begin_episode(task, init);
  if (cycle_done_) ++cycles_;  // the horizon ended the cycle before its reset
  queue_.clear();
  queue_pos_ = 0;
  cycle_done_ = false;
}

bool PrecondTargetingPolicy::start_cycle(const State& state) {
  const TaskContext& ctx = task();
  const PackedState packed = ctx.pack(state);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < diffs_.size(); ++i) {
    if (diffs_[i].dissonance() == 0) continue;
    const Operator& op = ops_[diffs_[i].learned_index];
    std::string text = serialize_operators(ctx.domain(), std::span<const Operator>(&op, 1), "key");
    if (deferred_.count({text, ctx.task().name})) continue;
    candidates.push_back(i);
  }
  while (!candidates.empty()) {
    const std::size_t pick = uniform_index(rng_, candidates.size());
    const PreconditionDiff& d = diffs_[candidates[pick]];
    const Operator& learned = ops_[d.learned_index];
    const Operator& gt = gt_[d.gt_index];
    std::vector<DissonantGoal> goals = dissonant_goals(d, gt, learned, ctx, rng_, done_[d.gt_index]);
    const Operator canonical_gt = canonical_learning_form(gt);
    std::size_t attempts = 0;
    for (const DissonantGoal& goal : goals) {
      if (attempts >= options_.max_plan_attempts) break;
      GroundGoal compiled = ctx.compile_goal(goal.literals);
      if (compiled.unsatisfiable || !relaxed_reachable(ctx.gt_model(), packed, compiled)) continue;
      ++attempts;
      PlanResult r = plan(ctx, ctx.gt_model(), packed, compiled, options_.budget, rng_);
      if (!r.found()) continue;
      queue_ = r.plan.steps;
      queue_.push_back(ground_action(ctx.domain(), canonical_gt.action, canonical_gt.action_binding, goal.binding));
      queue_pos_ = 0;
      pending_goal_ = goal.literals;
      pending_gt_ = d.gt_index;
      pending_text_ = goal_text(ctx.task(), goal.literals);
      trace({goal.stronger_family ? "target-stronger" : "target-weaker", "", pending_text_, r.plan.size(),
             std::nullopt, dissonance_});
      return true;
    }
    std::string text = serialize_operators(ctx.domain(), std::span<const Operator>(&learned, 1), "key");
    deferred_.insert({text, ctx.task().name});
    trace({"deferred", "", learned.name, std::nullopt, std::nullopt, dissonance_});
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return false;
}

PolicyDecision PrecondTargetingPolicy::next(const State& state) {
  const Task& t = task().task();
  if (queue_pos_ < queue_.size()) {
    const GroundAction a = queue_[queue_pos_++];
    const bool last = queue_pos_ == queue_.size();
    if (last) {
      done_[pending_gt_].insert(pending_goal_);
      cycle_done_ = true;
    }
    trace({last ? "target-act" : "target-plan", to_string(t, a), pending_text_, queue_.size() - 1, std::nullopt,
           dissonance_});
    return PolicyDecision::act(a);
  }
  if (cycle_done_) {
    cycle_done_ = false;
    queue_.clear();
    queue_pos_ = 0;
    ++cycles_;
    trace({"reset", "", "", std::nullopt, std::nullopt, dissonance_});
    return PolicyDecision::reset();
  }
  if (dissonance_ == 0) {
    trace({"converged", "", "", std::nullopt, std::nullopt, 0});
    return PolicyDecision::converged();
  }
  if (start_cycle(state)) return next(state);
  GroundAction a = random_action();
  trace({"random", to_string(t, a), "", std::nullopt, std::nullopt, dissonance_});
  return PolicyDecision::act(a);
}

}  // namespace relearn
