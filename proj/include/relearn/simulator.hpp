#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "relearn/random.hpp"
#include "relearn/relcore/ground_model.hpp"

namespace relearn {

struct Transition {
  std::shared_ptr<const Task> task;
  State state;
  GroundAction action;
  State next_state;

  bool is_noop() const { return state == next_state; }
};

struct EpisodeLog {
  std::string task_id;
  std::vector<Transition> transitions;
  std::size_t steps_used = 0;
  bool reset_requested = false;  // policy asked to restart the same task
  bool ended_early = false;      // policy produced no action
  bool converged = false;        // policy reported nothing left to learn
};

// Deterministic ground-truth environment for one task.
class Simulator {
 public:
  explicit Simulator(std::shared_ptr<const TaskContext> context);

  const TaskContext& context() const { return *context_; }

  // Applies the unique applicable ground-truth operator, or returns a no-op
  // transition when none applies. Throws ModelError for ill-typed actions.
  Transition step(const State& state, const GroundAction& action) const;
  PackedState step(const PackedState& state, std::uint32_t action_index) const;

 private:
  std::shared_ptr<const TaskContext> context_;
};

struct PolicyDecision {
  enum class Kind { kAct, kReset, kNone, kConverged };
  Kind kind = Kind::kNone;
  GroundAction action;

  static PolicyDecision act(const GroundAction& a) { return {Kind::kAct, a}; }
  static PolicyDecision reset() { return {Kind::kReset, {}}; }
  static PolicyDecision none() { return {Kind::kNone, {}}; }
  static PolicyDecision converged() { return {Kind::kConverged, {}}; }
};

// Anything that chooses actions during an episode.
class EpisodePolicy {
 public:
  virtual ~EpisodePolicy() = default;
  virtual void begin_episode(const TaskContext& /*task*/, const State& /*init*/) {}
  virtual PolicyDecision next(const State& state) = 0;
  virtual void observe(const Transition& /*t*/) {}
};

// Runs at most `horizon` steps from the task's initial state. Every
// transition, no-ops included, is appended to `dataset` when it is given.
EpisodeLog run_episode(EpisodePolicy& policy, const Simulator& sim, std::size_t horizon,
                       std::vector<Transition>* dataset);

// Uniform draw over the training tasks.
std::size_t rotate_task(std::size_t num_tasks, Rng& rng);

// One line per step: task, step index, action, added atoms, deleted atoms,
// tab separated. Atom lists are concatenated "(pred arg ...)" groups.
std::string format_episode_log(const EpisodeLog& log);

// Re-executes each recorded action from its recorded state and checks that
// the simulator reproduces the recorded next state.
bool replay_matches(const EpisodeLog& log, const Simulator& sim);

}  // namespace relearn
