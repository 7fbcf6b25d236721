#include "relearn/learner.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>

namespace relearn {

namespace {

constexpr std::size_t kMaxPermutedVariables = 6;

LiftedAtom rename(LiftedAtom a, std::span<const VarId> perm) {
  for (std::size_t i = 0; i < a.arity; ++i) a.vars[i] = perm[a.vars[i]];
  return a;
}

std::vector<LiftedAtom> rename_sorted(const std::vector<LiftedAtom>& atoms, std::span<const VarId> perm) {
  std::vector<LiftedAtom> out;
  out.reserve(atoms.size());
  for (const auto& a : atoms) out.push_back(rename(a, perm));
  std::sort(out.begin(), out.end());
  return out;
}

// Permutation of the variables at or after `first_free` that makes the
// sorted (add, del) pair lexicographically smallest. Variables before
// `first_free` are fixed.
std::vector<VarId> minimal_free_renaming(std::size_t num_vars, std::size_t first_free,
                                         const std::vector<LiftedAtom>& add, const std::vector<LiftedAtom>& del) {
  std::vector<VarId> perm(num_vars);
  std::iota(perm.begin(), perm.end(), VarId{0});
  if (num_vars - first_free < 2 || num_vars - first_free > kMaxPermutedVariables) return perm;
  std::vector<VarId> best = perm;
  auto best_key = std::make_pair(rename_sorted(add, perm), rename_sorted(del, perm));
  while (std::next_permutation(perm.begin() + static_cast<std::ptrdiff_t>(first_free), perm.end())) {
    auto key = std::make_pair(rename_sorted(add, perm), rename_sorted(del, perm));
    if (key < best_key) {
      best_key = std::move(key);
      best = perm;
    }
  }
  return best;
}

}  // namespace

Operator canonical_learning_form(const Operator& op) {
  Operator c = canonical_operator_form(op);
  std::size_t num_args = 0;
  for (VarId v : c.action_binding) num_args = std::max<std::size_t>(num_args, v + 1u);
  std::vector<VarId> perm = minimal_free_renaming(c.arity(), num_args, c.add_effects, c.delete_effects);
  if (std::is_sorted(perm.begin(), perm.end())) return c;
  Operator out = c;
  for (std::size_t v = 0; v < perm.size(); ++v) {
    out.parameter_names[perm[v]] = c.parameter_names[v];
    out.parameter_types[perm[v]] = c.parameter_types[v];
  }
  out.add_effects = rename_sorted(c.add_effects, perm);
  out.delete_effects = rename_sorted(c.delete_effects, perm);
  for (auto& l : out.preconditions) l.atom = rename(l.atom, perm);
  out.normalize();
  return out;
}

Atom unlift(const LiftedAtom& a, std::span<const ObjectId> objects) {
  Atom g;
  g.predicate = a.predicate;
  g.arity = a.arity;
  for (std::size_t i = 0; i < a.arity; ++i) g.args[i] = objects[a.vars[i]];
  return g;
}

LiftedTransition lift_transition(const Transition& t) {
  const Task& task = *t.task;
  const Domain& d = *task.domain;
  const ActionSchema& schema = d.actions[t.action.action];
  LiftedTransition lt;
  lt.source = &t;
  lt.action = t.action.action;

  std::map<ObjectId, VarId> var_of;
  auto bind = [&](ObjectId o, TypeId ty) {
    auto [it, inserted] = var_of.emplace(o, static_cast<VarId>(lt.objects.size()));
    if (inserted) {
      lt.objects.push_back(o);
      lt.variable_types.push_back(ty);
    } else if (d.is_subtype(ty, lt.variable_types[it->second])) {
      lt.variable_types[it->second] = ty;  // keep the narrower of two argument types
    }
    return it->second;
  };
  for (std::size_t j = 0; j < t.action.arity; ++j) {
    lt.action_binding.push_back(bind(t.action.args[j], schema.parameter_types[j]));
  }
  const std::size_t num_args = lt.objects.size();

  std::vector<Atom> added = state_difference(t.next_state, t.state);
  std::vector<Atom> deleted = state_difference(t.state, t.next_state);
  // Effect-only objects, numbered by first appearance over the sorted effects.
  for (const auto* effects : {&added, &deleted}) {
    for (const Atom& a : *effects) {
      for (ObjectId o : a.arguments()) {
        if (!var_of.count(o)) bind(o, task.object_types[o]);
      }
    }
  }
  auto lift = [&](const Atom& a) {
    LiftedAtom l;
    l.predicate = a.predicate;
    l.arity = a.arity;
    for (std::size_t i = 0; i < a.arity; ++i) l.vars[i] = var_of.at(a.args[i]);
    return l;
  };
  for (const Atom& a : added) lt.add.push_back(lift(a));
  for (const Atom& a : deleted) lt.del.push_back(lift(a));
  for (const Atom& a : t.state) {
    bool bound = std::all_of(a.arguments().begin(), a.arguments().end(),
                             [&](ObjectId o) { return var_of.count(o) > 0; });
    if (bound) lt.context.push_back(lift(a));
  }

  // Canonical numbering of effect-only variables.
  std::sort(lt.add.begin(), lt.add.end());
  std::sort(lt.del.begin(), lt.del.end());
  std::vector<VarId> perm = minimal_free_renaming(lt.objects.size(), num_args, lt.add, lt.del);
  if (!std::is_sorted(perm.begin(), perm.end())) {
    std::vector<ObjectId> objects(lt.objects.size());
    std::vector<TypeId> types(lt.objects.size());
    for (std::size_t v = 0; v < perm.size(); ++v) {
      objects[perm[v]] = lt.objects[v];
      types[perm[v]] = lt.variable_types[v];
    }
    lt.objects = std::move(objects);
    lt.variable_types = std::move(types);
    lt.add = rename_sorted(lt.add, perm);
    lt.del = rename_sorted(lt.del, perm);
    lt.context = rename_sorted(lt.context, perm);
  }
  std::sort(lt.context.begin(), lt.context.end());
  return lt;
}

std::vector<EffectCluster> cluster_by_effects(std::span<const LiftedTransition> lifted) {
  using Key = std::tuple<ActionId, std::vector<VarId>, std::vector<TypeId>, std::vector<LiftedAtom>,
                         std::vector<LiftedAtom>>;
  std::map<Key, EffectCluster> clusters;
  std::map<ActionId, std::vector<const LiftedTransition*>> by_action;
  for (const auto& lt : lifted) {
    by_action[lt.action].push_back(&lt);
    if (lt.is_noop()) continue;
    Key key{lt.action, lt.action_binding, lt.variable_types, lt.add, lt.del};
    auto [it, inserted] = clusters.try_emplace(std::move(key));
    EffectCluster& c = it->second;
    if (inserted) {
      c.action = lt.action;
      c.action_binding = lt.action_binding;
      c.variable_types = lt.variable_types;
      c.add = lt.add;
      c.del = lt.del;
    }
    c.positives.push_back(&lt);
  }
  std::vector<EffectCluster> out;
  out.reserve(clusters.size());
  for (auto& [key, c] : clusters) {
    for (const LiftedTransition* lt : by_action[c.action]) {
      bool member = !lt->is_noop() && lt->action_binding == c.action_binding && lt->variable_types == c.variable_types &&
                    lt->add == c.add && lt->del == c.del;
      if (!member) c.negatives.push_back(lt);
    }
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

// Object assignments to the operator's variables under which the operator
// could fire for `t`'s action. Effect-only variables range over all objects
// of their type in the transition's task.
std::vector<std::vector<ObjectId>> bindings_for(const Operator& op, const Transition& t) {
  const Task& task = *t.task;
  const Domain& d = *task.domain;
  std::vector<ObjectId> binding(op.arity(), 0);
  std::vector<bool> set(op.arity(), false);
  for (std::size_t j = 0; j < t.action.arity; ++j) {
    VarId v = op.action_binding[j];
    ObjectId o = t.action.args[j];
    if (set[v] && binding[v] != o) return {};
    if (!d.is_subtype(task.object_types[o], op.parameter_types[v])) return {};
    binding[v] = o;
    set[v] = true;
  }
  std::vector<VarId> free_vars;
  std::vector<std::vector<ObjectId>> domains;
  for (std::size_t v = 0; v < op.arity(); ++v) {
    if (set[v]) continue;
    free_vars.push_back(static_cast<VarId>(v));
    domains.push_back(task.objects_of_type(op.parameter_types[v]));
    if (domains.back().empty()) return {};
  }
  std::vector<std::vector<ObjectId>> out;
  std::vector<std::size_t> pos(free_vars.size(), 0);
  while (true) {
    for (std::size_t k = 0; k < free_vars.size(); ++k) binding[free_vars[k]] = domains[k][pos[k]];
    out.push_back(binding);
    std::size_t k = free_vars.size();
    while (k > 0 && ++pos[k - 1] == domains[k - 1].size()) pos[--k] = 0;
    if (k == 0) break;
  }
  return out;
}

bool preconditions_hold(const Operator& op, const State& s, std::span<const ObjectId> binding) {
  for (const auto& l : op.preconditions) {
    if (s.contains(unlift(l.atom, binding)) != l.positive) return false;
  }
  return true;
}

State apply_effects(const Operator& op, const State& s, std::span<const ObjectId> binding) {
  State next = s;
  for (const auto& a : op.delete_effects) next.erase(unlift(a, binding));
  for (const auto& a : op.add_effects) next.insert(unlift(a, binding));
  return next;
}

// Bindings under which `op` fires on `t` and mispredicts it.
std::vector<std::vector<ObjectId>> violations(const Operator& op, const Transition& t) {
  std::vector<std::vector<ObjectId>> out;
  for (auto& b : bindings_for(op, t)) {
    if (preconditions_hold(op, t.state, b) && apply_effects(op, t.state, b) != t.next_state) out.push_back(std::move(b));
  }
  return out;
}

// Every lifted atom over the operator's variables that respects predicate
// argument types.
std::vector<LiftedAtom> all_lifted_atoms(const Operator& op, const Domain& d) {
  std::vector<LiftedAtom> out;
  for (std::size_t p = 0; p < d.predicates.size(); ++p) {
    const auto& schema = d.predicates[p];
    std::vector<std::vector<VarId>> choices(schema.arity());
    bool possible = true;
    for (std::size_t i = 0; i < schema.arity(); ++i) {
      for (std::size_t v = 0; v < op.arity(); ++v) {
        if (d.is_subtype(op.parameter_types[v], schema.parameter_types[i])) choices[i].push_back(static_cast<VarId>(v));
      }
      possible &= !choices[i].empty();
    }
    if (!possible) continue;
    std::vector<std::size_t> pos(schema.arity(), 0);
    while (true) {
      LiftedAtom a;
      a.predicate = static_cast<PredicateId>(p);
      a.arity = static_cast<std::uint8_t>(schema.arity());
      for (std::size_t i = 0; i < schema.arity(); ++i) a.vars[i] = choices[i][pos[i]];
      out.push_back(a);
      std::size_t k = schema.arity();
      while (k > 0 && ++pos[k - 1] == choices[k - 1].size()) pos[--k] = 0;
      if (k == 0) break;
    }
  }
  return out;
}

}  // namespace

Operator induce_preconditions(const EffectCluster& cluster, const Domain& domain) {
  if (cluster.positives.empty()) throw std::invalid_argument("cluster has no positive members");
  Operator op;
  op.name = domain.actions[cluster.action].name;
  op.action = cluster.action;
  op.action_binding = cluster.action_binding;
  op.parameter_types = cluster.variable_types;
  for (std::size_t v = 0; v < op.parameter_types.size(); ++v) op.parameter_names.push_back("?x" + std::to_string(v));
  op.add_effects = cluster.add;
  op.delete_effects = cluster.del;

  std::vector<LiftedAtom> common = cluster.positives.front()->context;
  std::vector<LiftedAtom> seen = common;
  for (std::size_t i = 1; i < cluster.positives.size(); ++i) {
    const auto& ctx = cluster.positives[i]->context;
    std::vector<LiftedAtom> next;
    std::set_intersection(common.begin(), common.end(), ctx.begin(), ctx.end(), std::back_inserter(next));
    common = std::move(next);
    std::vector<LiftedAtom> merged;
    std::set_union(seen.begin(), seen.end(), ctx.begin(), ctx.end(), std::back_inserter(merged));
    seen = std::move(merged);
  }
  for (const auto& a : common) op.preconditions.push_back({a, true});
  op.normalize();

  // Greedy strengthening with absence literals. Only atoms false in every
  // positive context qualify, so positives stay satisfied.
  std::vector<std::pair<const Transition*, std::vector<std::vector<ObjectId>>>> violated;
  auto recompute = [&]() {
    violated.clear();
    for (const LiftedTransition* n : cluster.negatives) {
      auto v = violations(op, *n->source);
      if (!v.empty()) violated.emplace_back(n->source, std::move(v));
    }
  };
  recompute();
  if (violated.empty()) return op;

  std::vector<LiftedAtom> candidates;
  for (const auto& a : all_lifted_atoms(op, domain)) {
    if (!std::binary_search(seen.begin(), seen.end(), a)) candidates.push_back(a);
  }
  while (!violated.empty()) {
    const LiftedAtom* best = nullptr;
    std::size_t best_excluded = 0;
    for (const auto& a : candidates) {
      std::size_t excluded = 0;
      for (const auto& [t, bindings] : violated) {
        bool all = std::all_of(bindings.begin(), bindings.end(),
                               [&](const std::vector<ObjectId>& b) { return t->state.contains(unlift(a, b)); });
        excluded += all;
      }
      if (excluded > best_excluded) {
        best = &a;
        best_excluded = excluded;
      }
    }
    if (!best) {
      op.conflict = true;
      break;
    }
    op.preconditions.push_back({*best, false});
    op.normalize();
    recompute();
  }
  return op;
}

void OperatorLearner::add(const Transition& t) {
  transitions_.push_back(t);
  lifted_.push_back(lift_transition(transitions_.back()));
}

void OperatorLearner::add(std::span<const Transition> ts) {
  for (const auto& t : ts) add(t);
}

std::vector<Operator> OperatorLearner::learn() const {
  if (transitions_.empty()) return {};
  std::vector<LiftedTransition> lifted(lifted_.begin(), lifted_.end());
  const Domain& domain = *transitions_.front().task->domain;
  std::vector<Operator> ops;
  for (const auto& c : cluster_by_effects(lifted)) ops.push_back(induce_preconditions(c, domain));
  return ops;
}

std::vector<Operator> learn_operators(std::span<const Transition> dataset) {
  OperatorLearner learner;
  learner.add(dataset);
  return learner.learn();
}

Prediction predict(std::span<const Operator> ops, const Task& task, const State& state, const GroundAction& action) {
  Transition probe{nullptr, state, action, state};
  std::shared_ptr<const Task> alias(std::shared_ptr<const Task>{}, &task);
  probe.task = alias;
  Prediction out;
  out.next = state;
  std::size_t best_size = 0;
  int matches = 0;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const Operator& op = ops[i];
    if (op.action != action.action) continue;
    for (const auto& b : bindings_for(op, probe)) {
      if (!preconditions_hold(op, state, b)) continue;
      ++matches;
      if (out.op < 0 || op.preconditions.size() > best_size) {
        out.op = static_cast<std::int32_t>(i);
        best_size = op.preconditions.size();
        out.next = apply_effects(op, state, b);
      }
    }
  }
  out.ambiguous = matches > 1;
  return out;
}

}  // namespace relearn
