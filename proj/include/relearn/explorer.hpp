#pragma once

#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "relearn/learner.hpp"
#include "relearn/planner.hpp"

namespace relearn {

// Line-delimited policy trace. One record per decision:
// step, stage, action, goal, plan length, divergence step, dissonance.
// Missing fields are written as "-".
class TraceLog {
 public:
  struct Record {
    std::string stage{};
    std::string action{};
    std::string goal{};
    std::optional<std::size_t> plan_length{};
    std::optional<std::size_t> diverged_at{};
    std::optional<std::size_t> dissonance{};
  };

  void set_step(std::size_t step) { step_ = step; }
  std::size_t step() const { return step_; }
  void advance() { ++step_; }
  void record(const Record& r);
  const std::string& text() const { return text_; }

 private:
  std::size_t step_ = 0;
  std::string text_;
};

// Shared state of every exploration policy: the current learned operators,
// their compiled form for the current task, a run-level RNG and the trace.
class ExplorationPolicy : public EpisodePolicy {
 public:
  ExplorationPolicy(Rng& rng, TraceLog* trace) : rng_(rng), trace_(trace) {}

  // Called by the harness after every relearn.
  virtual void set_operators(std::vector<Operator> ops);
  const std::vector<Operator>& operators() const { return ops_; }

  void begin_episode(const TaskContext& task, const State& init) override;
  void observe(const Transition& t) override;

 protected:
  const TaskContext& task() const { return *task_; }
  const GroundModel& learned_model() const { return learned_model_; }
  GroundAction random_action();
  void trace(TraceLog::Record r);

  Rng& rng_;
  TraceLog* trace_;
  std::vector<Operator> ops_;
  std::size_t ops_version_ = 0;

 private:
  const TaskContext* task_ = nullptr;
  GroundModel learned_model_;
  std::pair<const TaskContext*, std::size_t> compiled_for_{nullptr, static_cast<std::size_t>(-1)};
};

// Uniform draw over the task's ground actions.
GroundAction random_policy(const TaskContext& task, Rng& rng);

class RandomPolicy : public ExplorationPolicy {
 public:
  using ExplorationPolicy::ExplorationPolicy;
  PolicyDecision next(const State& state) override;
};

// ---------------------------------------------------------------------------
// Goal babbling over lifted goals of at most two literals.

struct GoalActionPair {
  std::vector<LiftedLiteral> goal;
  std::vector<TypeId> variable_types;  // goal variables first, then action-only ones
  std::size_t num_goal_variables = 0;
  ActionId action = 0;
  std::vector<VarId> action_args;

  friend auto operator<=>(const GoalActionPair&, const GoalActionPair&) = default;
};

// Renames variables to the lexicographically smallest equivalent pair.
GoalActionPair canonical_pair(const GoalActionPair& p);

// Every canonical pair whose goal has 1 to `max_literals` positive literals
// without a repeated variable inside a literal, and whose action arguments
// are distinct variables, each either a type-compatible goal variable or a
// fresh one.
std::vector<GoalActionPair> enumerate_goal_action_pairs(const Domain& domain, std::size_t max_literals = 2);

// Pool of not-yet-sampled pairs. Sampling is uniform without replacement.
class NoveltyStore {
 public:
  explicit NoveltyStore(std::vector<GoalActionPair> pool) : pool_(std::move(pool)) {}
  std::size_t remaining() const { return pool_.size(); }
  std::size_t sampled() const { return sampled_.size(); }
  bool was_sampled(const GoalActionPair& p) const { return sampled_.count(canonical_pair(p)) > 0; }
  // nullopt once every pair has been returned.
  std::optional<GoalActionPair> sample(Rng& rng);

 private:
  std::vector<GoalActionPair> pool_;
  std::set<GoalActionPair> sampled_;
};

std::optional<GoalActionPair> glib_sample(NoveltyStore& store, Rng& rng);

struct GlibOptions {
  std::size_t attempts_per_step = 10;
  SearchBudget babble_budget{2000, 80, std::chrono::milliseconds(10000)};
};

class GlibPolicy : public ExplorationPolicy {
 public:
  GlibPolicy(const Domain& domain, Rng& rng, TraceLog* trace, GlibOptions options = {});
  GlibPolicy(NoveltyStore store, Rng& rng, TraceLog* trace, GlibOptions options = {});
  PolicyDecision next(const State& state) override;
  void observe(const Transition& t) override;
  void begin_episode(const TaskContext& task, const State& init) override;
  bool exhausted() const { return exhausted_; }
  const NoveltyStore& store() const { return store_; }

 private:
  GlibOptions options_;
  NoveltyStore store_;
  bool exhausted_ = false;
  std::optional<Plan> plan_;
  std::size_t plan_pos_ = 0;
  std::optional<GroundAction> follow_;
  std::optional<std::size_t> awaiting_;  // plan step whose outcome is pending
  std::string goal_text_;
};

// ---------------------------------------------------------------------------
// Oracle-BFS.

// Actions whose learned and ground-truth predictions differ at `s`, in
// action-index order.
std::vector<std::uint32_t> mismatching_actions(const GroundModel& learned, const GroundModel& gt, const PackedState& s);

struct OracleBfsOptions {
  std::size_t max_depth = 2;
  std::size_t neighbors = 50;
};

enum class BfsStage { kCurrentMismatch, kSearch, kRandom };

struct OracleBfsChoice {
  std::uint32_t action = 0;
  BfsStage stage = BfsStage::kRandom;
};

OracleBfsChoice oracle_bfs_policy(const TaskContext& task, const GroundModel& learned, const PackedState& state,
                                  Rng& rng, const OracleBfsOptions& options = {});

class OracleBfsPolicy : public ExplorationPolicy {
 public:
  OracleBfsPolicy(Rng& rng, TraceLog* trace, OracleBfsOptions options = {})
      : ExplorationPolicy(rng, trace), options_(options) {}
  PolicyDecision next(const State& state) override;

 private:
  OracleBfsOptions options_;
};

// ---------------------------------------------------------------------------
// Oracle demonstrations and precondition targeting.

// One transition per ground-truth operator, in operator order.
struct DemoSet {
  std::vector<Transition> transitions;
};

// For each ground-truth operator, scans the training tasks in order and the
// injective groundings of the operator's parameters in lexicographic order,
// plans to the grounded preconditions and records only the application.
// Throws ModelError naming the operator when no grounding is reachable.
DemoSet generate_demos(std::span<const std::shared_ptr<const TaskContext>> training, const SearchBudget& budget,
                       Rng& rng);

struct PreconditionDiff {
  std::size_t learned_index = 0;
  std::size_t gt_index = 0;
  std::vector<LiftedLiteral> stronger;  // in learned, not in ground truth
  std::vector<LiftedLiteral> weaker;    // in ground truth, not in learned
  std::size_t dissonance() const { return stronger.size() + weaker.size(); }
};

// Index of the ground-truth operator with the same lifted effect signature.
std::optional<std::size_t> match_operator(const Operator& learned, std::span<const Operator> gt);

// Syntactic comparison of canonical forms. Throws ModelError when the two
// operators have different effect signatures.
PreconditionDiff precondition_diff(const Operator& learned, const Operator& gt);

// Diffs of every learned operator that has a ground-truth counterpart.
std::vector<PreconditionDiff> diff_all(std::span<const Operator> learned, std::span<const Operator> gt);
std::size_t total_dissonance(std::span<const Operator> learned, std::span<const Operator> gt);

struct DissonantGoal {
  std::vector<GroundLiteral> literals;
  std::vector<ObjectId> binding;  // canonical parameter -> object
  std::size_t violated = 0;
  bool stronger_family = true;
};

// Goals that satisfy one side's preconditions while violating k-subsets
// (k <= 3) of the differing literals, over injective groundings. Ranked by
// descending k with ties in random order. Contradictory goals, goals over
// type-inconsistent atoms and goals in `done` are dropped.
std::vector<DissonantGoal> dissonant_goals(const PreconditionDiff& diff, const Operator& gt, const Operator& learned,
                                           const TaskContext& task, Rng& rng,
                                           const std::set<std::vector<GroundLiteral>>& done = {});

struct TargetingOptions {
  std::size_t max_plan_attempts = 64;
  SearchBudget budget{};
};

class PrecondTargetingPolicy : public ExplorationPolicy {
 public:
  PrecondTargetingPolicy(std::vector<Operator> gt, Rng& rng, TraceLog* trace, TargetingOptions options = {});
  void set_operators(std::vector<Operator> ops) override;
  void begin_episode(const TaskContext& task, const State& init) override;
  PolicyDecision next(const State& state) override;

  std::size_t dissonance() const { return dissonance_; }
  std::size_t completed_cycles() const { return cycles_; }

 private:
  bool start_cycle(const State& state);

  std::vector<Operator> gt_;
  TargetingOptions options_;
  std::vector<PreconditionDiff> diffs_;
  std::size_t dissonance_ = 0;
  std::vector<GroundAction> queue_;
  std::size_t queue_pos_ = 0;
  bool cycle_done_ = false;
  std::size_t cycles_ = 0;
  std::vector<GroundLiteral> pending_goal_;
  std::size_t pending_gt_ = 0;
  std::string pending_text_;
  // Ground-truth operator -> goals already achieved and executed.
  std::map<std::size_t, std::set<std::vector<GroundLiteral>>> done_;
  // (learned operator text, task name) with no plannable goal.
  std::set<std::pair<std::string, std::string>> deferred_;
};

}  // namespace relearn
