#pragma once

#include <deque>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "relearn/relcore/ground_model.hpp"
#include "relearn/relcore/pddl.hpp"
#include "relearn/simulator.hpp"

namespace relearn::testing {

// Paths starting with "fixtures/" resolve to the test fixtures; all others
// to the bundled domains.
inline std::string data_path(const std::string& rel) {
  const std::string prefix = "fixtures/";
  if (rel.rfind(prefix, 0) == 0) return std::string(RELEARN_FIXTURE_DIR) + "/" + rel.substr(prefix.size());
  return std::string(RELEARN_DATA_DIR) + "/" + rel;
}

inline std::shared_ptr<const Domain> load_domain(const std::string& rel) {
  return std::make_shared<const Domain>(parse_domain(read_file(data_path(rel))));
}

inline std::shared_ptr<const Task> load_task(const std::shared_ptr<const Domain>& d, const std::string& rel) {
  return std::make_shared<const Task>(parse_problem(read_file(data_path(rel)), d));
}

inline std::shared_ptr<const TaskContext> load_context(const std::shared_ptr<const Domain>& d,
                                                       const std::string& rel) {
  return std::make_shared<const TaskContext>(load_task(d, rel));
}

inline Atom atom(const Task& t, const std::string& pred, std::initializer_list<std::string> args) {
  Atom a;
  a.predicate = *t.domain->find_predicate(pred);
  for (const auto& n : args) a.args[a.arity++] = *t.find_object(n);
  return a;
}

inline GroundAction action(const Task& t, const std::string& name, std::initializer_list<std::string> args) {
  GroundAction a;
  a.action = *t.domain->find_action(name);
  for (const auto& n : args) a.args[a.arity++] = *t.find_object(n);
  return a;
}

// Breadth-first enumeration of ground-truth states within `depth` steps.
inline std::vector<PackedState> reachable_states(const TaskContext& ctx, std::size_t depth) {
  std::vector<PackedState> out{ctx.pack(ctx.task().init)};
  std::unordered_set<PackedState, PackedStateHash> seen(out.begin(), out.end());
  std::size_t layer_begin = 0;
  for (std::size_t d = 0; d < depth; ++d) {
    std::size_t layer_end = out.size();
    for (std::size_t i = layer_begin; i < layer_end; ++i) {
      for (std::uint32_t a = 0; a < ctx.actions().size(); ++a) {
        PackedState next = ctx.gt_model().predict(out[i], a);
        if (seen.insert(next).second) out.push_back(next);
      }
    }
    layer_begin = layer_end;
  }
  return out;
}

// Every (state, action) transition from states within `depth - 1` steps, so
// that each transition ends within `depth` steps of the initial state.
inline std::vector<Transition> exhaustive_transitions(const std::shared_ptr<const TaskContext>& ctx, std::size_t depth) {
  std::vector<Transition> out;
  Simulator sim(ctx);
  for (const auto& s : reachable_states(*ctx, depth == 0 ? 0 : depth - 1)) {
    State st = ctx->unpack(s);
    for (std::uint32_t a = 0; a < ctx->actions().size(); ++a) {
      out.push_back(Transition{ctx->task_ptr(), st, ctx->actions()[a], ctx->unpack(ctx->gt_model().predict(s, a))});
    }
  }
  return out;
}

}  // namespace relearn::testing
