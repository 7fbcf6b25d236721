#pragma once

#include <deque>
#include <span>
#include <vector>

#include "relearn/simulator.hpp"

namespace relearn {

// A transition rewritten over variables. Variables 0..k-1 name the distinct
// action arguments in argument order; later variables name objects that
// occur only in the effects.
struct LiftedTransition {
  const Transition* source = nullptr;
  ActionId action = 0;
  std::vector<ObjectId> objects;       // variable -> object
  std::vector<TypeId> variable_types;  // declared type of each variable
  std::vector<VarId> action_binding;   // argument position -> variable
  std::vector<LiftedAtom> context;     // true atoms over the bound objects
  std::vector<LiftedAtom> add;
  std::vector<LiftedAtom> del;

  bool is_noop() const { return add.empty() && del.empty(); }
};

LiftedTransition lift_transition(const Transition& t);

// Operator renamed the way lifting names variables: action arguments first,
// then effect-only variables in the order that minimizes the effect lists.
Operator canonical_learning_form(const Operator& op);

// Maps a lifted atom back to objects.
Atom unlift(const LiftedAtom& a, std::span<const ObjectId> objects);

struct EffectCluster {
  ActionId action = 0;
  std::vector<VarId> action_binding;
  std::vector<TypeId> variable_types;
  std::vector<LiftedAtom> add;
  std::vector<LiftedAtom> del;
  std::vector<const LiftedTransition*> positives;
  // Same-schema transitions with other effects, no-ops included.
  std::vector<const LiftedTransition*> negatives;
};

// Clusters ordered by (action, binding pattern, variable types, effects).
std::vector<EffectCluster> cluster_by_effects(std::span<const LiftedTransition> lifted);

// Intersects the positive contexts, then adds negative literals until no
// negative member is mispredicted. Sets `conflict` when that is impossible.
Operator induce_preconditions(const EffectCluster& cluster, const Domain& domain);

// Keeps the dataset and its lifted form; learning is from scratch each call.
class OperatorLearner {
 public:
  void add(const Transition& t);
  void add(std::span<const Transition> ts);
  std::size_t size() const { return transitions_.size(); }
  const std::deque<Transition>& transitions() const { return transitions_; }

  std::vector<Operator> learn() const;

 private:
  std::deque<Transition> transitions_;
  std::deque<LiftedTransition> lifted_;
};

std::vector<Operator> learn_operators(std::span<const Transition> dataset);

struct Prediction {
  State next;
  bool ambiguous = false;
  std::int32_t op = -1;  // index of the firing operator, -1 for a no-op
};

// Lifted prediction: among operators with satisfied preconditions the one
// with the most preconditions fires, ties going to the lowest index.
Prediction predict(std::span<const Operator> ops, const Task& task, const State& state, const GroundAction& action);

}  // namespace relearn
