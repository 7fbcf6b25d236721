#include "relearn/simulator.hpp"

#include <sstream>
#include <stdexcept>

namespace relearn {

Simulator::Simulator(std::shared_ptr<const TaskContext> context) : context_(std::move(context)) {}

Transition Simulator::step(const State& state, const GroundAction& action) const {
  const TaskContext& ctx = *context_;
  ctx.task().check_action(action);
  std::uint32_t idx = ctx.action_index(action);
  PackedState next = step(ctx.pack(state), idx);
  return Transition{ctx.task_ptr(), state, action, ctx.unpack(next)};
}

PackedState Simulator::step(const PackedState& state, std::uint32_t action_index) const {
  return context_->gt_model().predict(state, action_index);
}

EpisodeLog run_episode(EpisodePolicy& policy, const Simulator& sim, std::size_t horizon,
                       std::vector<Transition>* dataset) {
  if (horizon == 0) throw std::invalid_argument("horizon must be at least 1");
  const TaskContext& ctx = sim.context();
  EpisodeLog log;
  log.task_id = ctx.task().name;
  State state = ctx.task().init;
  policy.begin_episode(ctx, state);
  while (log.steps_used < horizon) {
    PolicyDecision d = policy.next(state);
    if (d.kind == PolicyDecision::Kind::kReset) {
      log.reset_requested = true;
      break;
    }
    if (d.kind == PolicyDecision::Kind::kNone) {
      log.ended_early = true;
      break;
    }
    if (d.kind == PolicyDecision::Kind::kConverged) {
      log.converged = true;
      break;
    }
    Transition t = sim.step(state, d.action);
    ++log.steps_used;
    state = t.next_state;
    policy.observe(t);
    if (dataset) dataset->push_back(t);
    log.transitions.push_back(std::move(t));
  }
  return log;
}

std::size_t rotate_task(std::size_t num_tasks, Rng& rng) {
  if (num_tasks == 0) throw std::invalid_argument("no training tasks to rotate through");
  return static_cast<std::size_t>(uniform_index(rng, num_tasks));
}

std::string format_episode_log(const EpisodeLog& log) {
  std::ostringstream out;
  for (std::size_t i = 0; i < log.transitions.size(); ++i) {
    const Transition& t = log.transitions[i];
    const Task& task = *t.task;
    out << log.task_id << '\t' << i << '\t' << to_string(task, t.action) << '\t';
    for (const Atom& a : state_difference(t.next_state, t.state)) out << to_string(task, a);
    out << '\t';
    for (const Atom& a : state_difference(t.state, t.next_state)) out << to_string(task, a);
    out << '\n';
  }
  return out.str();
}

bool replay_matches(const EpisodeLog& log, const Simulator& sim) {
  for (const Transition& t : log.transitions) {
    if (sim.step(t.state, t.action).next_state != t.next_state) return false;
  }
  return true;
}

}  // namespace relearn
