#include "relearn/planner.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "relearn/relcore/pddl.hpp"

namespace relearn {

void SearchBudget::validate() const {
  if (max_expansions == 0 || max_plan_length == 0 || time_limit.count() <= 0) {
    throw std::invalid_argument("search budget limits must be positive");
  }
}

namespace {

constexpr std::uint32_t kUnreached = std::numeric_limits<std::uint32_t>::max();

class GoalCountHeuristic : public Heuristic {
 public:
  explicit GoalCountHeuristic(const GroundGoal& goal) : goal_(goal) {}
  std::optional<std::size_t> evaluate(const PackedState& s, std::vector<std::uint32_t>*) override {
    if (goal_.unsatisfiable) return std::nullopt;
    return goal_.unsatisfied_count(s);
  }

 private:
  GroundGoal goal_;
};

// Relaxed-plan length in the delete relaxation. Absence of an atom is a fact
// of its own (index num_atoms + atom), made true by operators deleting it,
// so negative preconditions and goals relax the same way positive ones do.
class RelaxedPlanHeuristic : public Heuristic {
 public:
  RelaxedPlanHeuristic(const GroundModel& model, const GroundGoal& goal)
      : model_(model), num_atoms_(static_cast<std::uint32_t>(model.num_atoms())), unsatisfiable_(goal.unsatisfiable) {
    const auto& ops = model.operators();
    const std::uint32_t num_facts = 2 * num_atoms_;
    pre_to_ops_.resize(num_facts);
    achievers_.resize(num_facts);
    pre_.resize(ops.size());
    eff_.resize(ops.size());
    for (std::uint32_t o = 0; o < ops.size(); ++o) {
      for (auto id : ops[o].pre_pos) pre_[o].push_back(id);
      for (auto id : ops[o].pre_neg) pre_[o].push_back(num_atoms_ + id);
      for (auto id : ops[o].add) eff_[o].push_back(id);
      for (auto id : ops[o].del) eff_[o].push_back(num_atoms_ + id);
      for (auto f : pre_[o]) pre_to_ops_[f].push_back(o);
      for (auto f : eff_[o]) achievers_[f].push_back(o);
      if (pre_[o].empty()) free_ops_.push_back(o);
    }
    for (auto id : goal.pos) goal_facts_.push_back(id);
    for (auto id : goal.neg) goal_facts_.push_back(num_atoms_ + id);
  }

  std::optional<std::size_t> evaluate(const PackedState& s, std::vector<std::uint32_t>* helpful) override {
    if (unsatisfiable_) return std::nullopt;
    if (!build_layers(s)) return std::nullopt;
    return extract(helpful);
  }

 private:
  bool build_layers(const PackedState& s) {
    const auto& ops = model_.operators();
    fact_layer_.assign(2 * num_atoms_, kUnreached);
    op_layer_.assign(ops.size(), kUnreached);
    counter_.resize(ops.size());
    for (std::uint32_t o = 0; o < ops.size(); ++o) counter_[o] = static_cast<std::uint32_t>(pre_[o].size());

    std::vector<std::uint32_t> frontier;
    frontier.reserve(num_atoms_);
    for (std::uint32_t i = 0; i < num_atoms_; ++i) {
      std::uint32_t f = s.test(i) ? i : num_atoms_ + i;
      fact_layer_[f] = 0;
      frontier.push_back(f);
    }
    std::size_t goals_left = 0;
    for (auto g : goal_facts_) goals_left += fact_layer_[g] == kUnreached;

    std::vector<std::uint32_t> reached_ops = free_ops_;
    for (auto o : reached_ops) op_layer_[o] = 0;
    std::uint32_t layer = 0;
    while (goals_left > 0) {
      for (auto f : frontier) {
        for (auto o : pre_to_ops_[f]) {
          if (--counter_[o] == 0) {
            op_layer_[o] = layer;
            reached_ops.push_back(o);
          }
        }
      }
      std::vector<std::uint32_t> next;
      for (auto o : reached_ops) {
        for (auto e : eff_[o]) {
          if (fact_layer_[e] == kUnreached) {
            fact_layer_[e] = layer + 1;
            next.push_back(e);
          }
        }
      }
      reached_ops.clear();
      if (next.empty()) break;
      for (auto g : goal_facts_) goals_left -= fact_layer_[g] == layer + 1;
      frontier = std::move(next);
      ++layer;
    }
    return goals_left == 0;
  }

  std::size_t extract(std::vector<std::uint32_t>* helpful) {
    std::uint32_t top = 0;
    for (auto g : goal_facts_) top = std::max(top, fact_layer_[g]);
    std::vector<std::vector<std::uint32_t>> goals_at(top + 1);
    marked_fact_.assign(2 * num_atoms_, false);
    marked_op_.assign(model_.operators().size(), false);
    for (auto g : goal_facts_) {
      if (fact_layer_[g] > 0 && !marked_fact_[g]) {
        marked_fact_[g] = true;
        goals_at[fact_layer_[g]].push_back(g);
      }
    }
    std::size_t h = 0;
    for (std::uint32_t i = top; i >= 1; --i) {
      for (std::size_t k = 0; k < goals_at[i].size(); ++k) {
        std::uint32_t g = goals_at[i][k];
        std::uint32_t best = kUnreached;
        for (auto o : achievers_[g]) {
          if (op_layer_[o] == i - 1) {
            best = o;
            break;
          }
        }
        if (marked_op_[best]) continue;
        marked_op_[best] = true;
        ++h;
        for (auto p : pre_[best]) {
          if (fact_layer_[p] > 0 && !marked_fact_[p]) {
            marked_fact_[p] = true;
            goals_at[fact_layer_[p]].push_back(p);
          }
        }
        for (auto e : eff_[best]) marked_fact_[e] = true;
      }
    }
    if (helpful && top >= 1) {
      for (auto g : goals_at[1]) {
        for (auto o : achievers_[g]) {
          if (op_layer_[o] == 0) helpful->push_back(model_.operators()[o].action);
        }
      }
      std::sort(helpful->begin(), helpful->end());
      helpful->erase(std::unique(helpful->begin(), helpful->end()), helpful->end());
    }
    return h;
  }

  const GroundModel& model_;
  std::uint32_t num_atoms_;
  bool unsatisfiable_;
  std::vector<std::vector<std::uint32_t>> pre_, eff_, pre_to_ops_, achievers_;
  std::vector<std::uint32_t> free_ops_, goal_facts_;
  std::vector<std::uint32_t> fact_layer_, op_layer_, counter_;
  std::vector<bool> marked_fact_, marked_op_;
};

struct Node {
  PackedState state;
  std::int64_t parent;
  std::uint32_t action;
  std::uint32_t depth;
};

struct OpenEntry {
  std::size_t h;
  std::uint8_t rank;  // 0 for helpful actions
  std::uint64_t order;
  std::uint32_t parent;
  std::uint32_t action;

  bool operator>(const OpenEntry& o) const {
    return std::tie(h, rank, order) > std::tie(o.h, o.rank, o.order);
  }
};

// Applies the actions in order, dropping those the model predicts as no-ops.
std::pair<PackedState, std::vector<std::uint32_t>> simulate(const GroundModel& model, const PackedState& start,
                                                            const std::vector<std::uint32_t>& actions) {
  PackedState s = start;
  std::vector<std::uint32_t> kept;
  for (auto a : actions) {
    std::int32_t gi = model.select(s, a);
    if (gi < 0) continue;
    s = model.operators()[gi].apply(s);
    kept.push_back(a);
  }
  return {std::move(s), std::move(kept)};
}

std::vector<std::uint32_t> eliminate_actions(const GroundModel& model, const PackedState& start, const GroundGoal& goal,
                                             std::vector<std::uint32_t> actions) {
  std::size_t i = 0;
  while (i < actions.size()) {
    std::vector<std::uint32_t> candidate = actions;
    candidate.erase(candidate.begin() + static_cast<std::ptrdiff_t>(i));
    auto [final_state, kept] = simulate(model, start, candidate);
    if (goal.satisfied_by(final_state)) {
      actions = std::move(kept);
    } else {
      ++i;
    }
  }
  return actions;
}

Plan make_plan(const TaskContext& ctx, const GroundModel& model, const PackedState& start,
               const std::vector<std::uint32_t>& actions) {
  Plan p;
  PackedState s = start;
  p.trajectory.push_back(ctx.unpack(s));
  for (auto a : actions) {
    s = model.predict(s, a);
    p.steps.push_back(ctx.actions()[a]);
    p.action_indices.push_back(a);
    p.trajectory.push_back(ctx.unpack(s));
  }
  return p;
}

}  // namespace

std::unique_ptr<Heuristic> make_heuristic(HeuristicKind kind, const GroundModel& model, const GroundGoal& goal) {
  if (kind == HeuristicKind::kGoalCount) return std::make_unique<GoalCountHeuristic>(goal);
  return std::make_unique<RelaxedPlanHeuristic>(model, goal);
}

bool relaxed_reachable(const GroundModel& model, const PackedState& s, const GroundGoal& goal) {
  RelaxedPlanHeuristic h(model, goal);
  return h.evaluate(s, nullptr).has_value();
}

PlanResult plan(const TaskContext& ctx, const GroundModel& model, const PackedState& start, const GroundGoal& goal,
                const SearchBudget& budget, Rng& rng, HeuristicKind kind) {
  budget.validate();
  PlanResult result;
  if (goal.unsatisfiable) return result;
  if (goal.satisfied_by(start)) {
    result.status = PlanStatus::kFound;
    result.plan = make_plan(ctx, model, start, {});
    return result;
  }
  auto heuristic = make_heuristic(kind, model, goal);
  const auto deadline = std::chrono::steady_clock::now() + budget.time_limit;

  std::vector<Node> nodes;
  std::unordered_map<PackedState, std::uint32_t, PackedStateHash> seen;
  using Queue = std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>>;
  // Queue 0 holds every successor, queue 1 only those reached by helpful
  // actions. The queue with the lower priority value is popped next; a new
  // best heuristic value lowers the helpful queue's value by kBoost.
  constexpr std::int64_t kBoost = 1000;
  Queue open[2];
  std::int64_t priority[2] = {0, 0};
  std::size_t best_h = std::numeric_limits<std::size_t>::max();
  std::uint64_t order = 0;
  std::vector<std::uint32_t> helpful, applicable, successors;
  bool pruned_by_length = false;

  auto expand = [&](std::uint32_t id, std::size_t h) {
    applicable.clear();
    model.applicable(nodes[id].state, applicable);
    successors.clear();
    for (auto gi : applicable) successors.push_back(model.operators()[gi].action);
    std::sort(successors.begin(), successors.end());
    successors.erase(std::unique(successors.begin(), successors.end()), successors.end());
    shuffle(successors, rng);
    for (auto a : successors) {
      bool pref = std::binary_search(helpful.begin(), helpful.end(), a);
      OpenEntry entry{h, static_cast<std::uint8_t>(pref ? 0 : 1), order++, id, a};
      open[0].push(entry);
      if (pref) open[1].push(entry);
    }
    if (h < best_h) {
      best_h = h;
      priority[1] -= kBoost;
    }
  };
  auto finish = [&](std::uint32_t id) {
    std::vector<std::uint32_t> actions;
    for (std::int64_t n = id; nodes[n].parent >= 0; n = nodes[n].parent) actions.push_back(nodes[n].action);
    std::reverse(actions.begin(), actions.end());
    actions = eliminate_actions(model, start, goal, std::move(actions));
    result.status = PlanStatus::kFound;
    result.plan = make_plan(ctx, model, start, actions);
  };

  auto h0 = heuristic->evaluate(start, &helpful);
  result.expansions = 1;
  if (!h0) return result;
  nodes.push_back(Node{start, -1, 0, 0});
  seen.emplace(start, 0);
  expand(0, *h0);

  while (!open[0].empty()) {
    if (result.expansions >= budget.max_expansions ||
        ((result.expansions & 63) == 0 && std::chrono::steady_clock::now() > deadline)) {
      result.status = PlanStatus::kBudget;
      return result;
    }
    const int q = (!open[1].empty() && priority[1] <= priority[0]) ? 1 : 0;
    ++priority[q];
    OpenEntry e = open[q].top();
    open[q].pop();
    const Node& parent = nodes[e.parent];
    if (parent.depth + 1 > budget.max_plan_length) {
      pruned_by_length = true;
      continue;
    }
    PackedState child = model.predict(parent.state, e.action);
    if (seen.count(child)) continue;
    auto id = static_cast<std::uint32_t>(nodes.size());
    nodes.push_back(Node{std::move(child), e.parent, e.action, parent.depth + 1});
    seen.emplace(nodes.back().state, id);
    if (goal.satisfied_by(nodes[id].state)) {
      finish(id);
      return result;
    }
    helpful.clear();
    auto h = heuristic->evaluate(nodes[id].state, &helpful);
    ++result.expansions;
    if (!h) continue;
    expand(id, *h);
  }
  result.status = pruned_by_length ? PlanStatus::kBudget : PlanStatus::kUnreachable;
  return result;
}

PlanResult plan(const TaskContext& ctx, std::span<const Operator> ops, const State& start,
                std::span<const GroundLiteral> goal, const SearchBudget& budget, Rng& rng, HeuristicKind kind) {
  GroundModel model = ctx.compile(ops);
  return plan(ctx, model, ctx.pack(start), ctx.compile_goal(goal), budget, rng, kind);
}

ExecutionResult execute_plan(const Plan& plan, const Simulator& sim, std::size_t max_steps) {
  if (plan.trajectory.size() != plan.steps.size() + 1) throw std::invalid_argument("plan has no predicted trajectory");
  ExecutionResult r;
  State state = plan.trajectory.front();
  for (std::size_t i = 0; i < plan.steps.size() && i < max_steps; ++i) {
    Transition t = sim.step(state, plan.steps[i]);
    state = t.next_state;
    bool diverged = t.next_state != plan.trajectory[i + 1];
    r.transitions.push_back(std::move(t));
    if (diverged) {
      r.diverged_at = i;
      break;
    }
  }
  r.completed = !r.diverged_at && r.transitions.size() == plan.steps.size();
  r.final_state = std::move(state);
  return r;
}

std::string format_plan(const Task& task, const Plan& plan) {
  std::string out;
  for (const auto& a : plan.steps) out += to_string(task, a) + "\n";
  return out;
}

std::vector<GroundAction> parse_plan(std::string_view text, const Task& task) {
  std::vector<GroundAction> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto c = line.find(';'); c != std::string::npos) line.erase(c);
    for (auto& ch : line) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    auto open_paren = line.find('(');
    if (open_paren == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) throw ParseError("expected '('", line_no, 1);
      continue;
    }
    auto close_paren = line.find(')', open_paren);
    if (close_paren == std::string::npos) {
      throw ParseError("missing ')'", line_no, static_cast<int>(line.size()) + 1);
    }
    std::istringstream words(line.substr(open_paren + 1, close_paren - open_paren - 1));
    std::string name, arg;
    words >> name;
    auto action = task.domain->find_action(name);
    if (!action) throw ParseError("unknown action '" + name + "'", line_no, static_cast<int>(open_paren) + 2);
    GroundAction ga;
    ga.action = *action;
    while (words >> arg) {
      auto o = task.find_object(arg);
      if (!o) throw ParseError("unknown object '" + arg + "'", line_no, static_cast<int>(open_paren) + 2);
      if (ga.arity == kMaxArity) throw ParseError("too many arguments", line_no, static_cast<int>(open_paren) + 2);
      ga.args[ga.arity++] = *o;
    }
    try {
      task.check_action(ga);
    } catch (const ModelError& e) {
      throw ParseError(e.what(), line_no, static_cast<int>(open_paren) + 1);
    }
    out.push_back(ga);
  }
  return out;
}

}  // namespace relearn
