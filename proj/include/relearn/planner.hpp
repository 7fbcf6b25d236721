#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relearn/random.hpp"
#include "relearn/simulator.hpp"

namespace relearn {

struct SearchBudget {
  std::size_t max_expansions = 50000;
  std::size_t max_plan_length = 80;
  std::chrono::milliseconds time_limit{10000};

  // Throws std::invalid_argument unless every limit is positive.
  void validate() const;
};

struct Plan {
  std::vector<GroundAction> steps;
  std::vector<std::uint32_t> action_indices;  // into the task's ActionSpace
  std::vector<State> trajectory;              // predicted states, steps + 1 entries
  std::string source;                         // label of the operator set used

  std::size_t size() const { return steps.size(); }
  bool empty() const { return steps.empty(); }
};

enum class PlanStatus {
  kFound,
  kUnreachable,  // no relaxed path to the goal, or the search space was exhausted
  kBudget,       // expansion or time limit hit
};

struct PlanResult {
  PlanStatus status = PlanStatus::kUnreachable;
  Plan plan;
  std::size_t expansions = 0;

  bool found() const { return status == PlanStatus::kFound; }
};

// Estimates distance to a goal. `evaluate` returns nullopt for states from
// which the goal is provably unreachable and may report helpful actions.
class Heuristic {
 public:
  virtual ~Heuristic() = default;
  virtual std::optional<std::size_t> evaluate(const PackedState& s, std::vector<std::uint32_t>* helpful) = 0;
};

enum class HeuristicKind { kRelaxedPlan, kGoalCount };

std::unique_ptr<Heuristic> make_heuristic(HeuristicKind kind, const GroundModel& model, const GroundGoal& goal);

// Greedy best-first search with lazy evaluation over `model`. Successors are
// shuffled with `rng` and go to an open list of all successors and, when
// reached by a helpful action, to a second list of helpful ones; the lists
// alternate, the helpful list gaining extra turns whenever the heuristic
// reaches a new best value. Ties are broken first-in first-out, helpful
// actions ahead of the rest. Found plans are shortened by greedy action
// elimination.
PlanResult plan(const TaskContext& ctx, const GroundModel& model, const PackedState& start, const GroundGoal& goal,
                const SearchBudget& budget, Rng& rng, HeuristicKind kind = HeuristicKind::kRelaxedPlan);

// Convenience overload that compiles `ops` for the task.
PlanResult plan(const TaskContext& ctx, std::span<const Operator> ops, const State& start,
                std::span<const GroundLiteral> goal, const SearchBudget& budget, Rng& rng,
                HeuristicKind kind = HeuristicKind::kRelaxedPlan);

// True when the goal is reachable in the delete relaxation from `s`.
bool relaxed_reachable(const GroundModel& model, const PackedState& s, const GroundGoal& goal);

struct ExecutionResult {
  bool completed = false;
  std::optional<std::size_t> diverged_at;  // index of the first mismatching step
  std::vector<Transition> transitions;
  State final_state;
};

// Executes the plan from its first predicted state, stopping after the first
// step whose observed next state differs from the prediction or after
// `max_steps` steps.
ExecutionResult execute_plan(const Plan& plan, const Simulator& sim,
                             std::size_t max_steps = static_cast<std::size_t>(-1));

// One "(action arg ...)" per line.
std::string format_plan(const Task& task, const Plan& plan);
std::vector<GroundAction> parse_plan(std::string_view text, const Task& task);

}  // namespace relearn
