#include "relearn/relcore/domain.hpp"

#include <algorithm>

namespace relearn {

namespace {

template <typename T>
void sort_unique(std::vector<T>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

void Operator::normalize() {
  sort_unique(preconditions);
  sort_unique(add_effects);
  sort_unique(delete_effects);
}

std::optional<TypeId> Domain::find_type(std::string_view type_name) const {
  for (std::size_t i = 0; i < types.size(); ++i) {
    if (types[i].name == type_name) return static_cast<TypeId>(i);
  }
  return std::nullopt;
}

std::optional<PredicateId> Domain::find_predicate(std::string_view pred_name) const {
  for (std::size_t i = 0; i < predicates.size(); ++i) {
    if (predicates[i].name == pred_name) return static_cast<PredicateId>(i);
  }
  return std::nullopt;
}

std::optional<ActionId> Domain::find_action(std::string_view action_name) const {
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i].name == action_name) return static_cast<ActionId>(i);
  }
  return std::nullopt;
}

bool Domain::is_subtype(TypeId t, TypeId ancestor) const {
  std::optional<TypeId> cur = t;
  while (cur) {
    if (*cur == ancestor) return true;
    cur = types[*cur].parent;
  }
  return false;
}

void Domain::validate() const {
  auto check_atom = [&](const Operator& op, PredicateId p, std::span<const VarId> vars) {
    if (p >= predicates.size()) {
      throw ModelError("operator " + op.name + " references an undeclared predicate");
    }
    const auto& schema = predicates[p];
    if (vars.size() != schema.arity()) {
      throw ModelError("operator " + op.name + ": arity mismatch for " + schema.name);
    }
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (vars[i] >= op.arity()) {
        throw ModelError("operator " + op.name + ": unbound variable in " + schema.name);
      }
    }
  };
  for (const auto& op : gt_operators) {
    if (op.action >= actions.size()) {
      throw ModelError("operator " + op.name + " references an undeclared action");
    }
    if (op.action_binding.size() != actions[op.action].arity()) {
      throw ModelError("operator " + op.name + ": action binding has wrong arity");
    }
    for (const auto& l : op.preconditions) check_atom(op, l.atom.predicate, l.atom.variables());
    for (const auto& a : op.add_effects) check_atom(op, a.predicate, a.variables());
    for (const auto& a : op.delete_effects) check_atom(op, a.predicate, a.variables());
  }
}

std::optional<ObjectId> Task::find_object(std::string_view object_name) const {
  auto it = std::lower_bound(object_names.begin(), object_names.end(), object_name);
  if (it == object_names.end() || *it != object_name) return std::nullopt;
  return static_cast<ObjectId>(it - object_names.begin());
}

std::vector<ObjectId> Task::objects_of_type(TypeId t) const {
  std::vector<ObjectId> out;
  for (std::size_t i = 0; i < object_types.size(); ++i) {
    if (domain->is_subtype(object_types[i], t)) out.push_back(static_cast<ObjectId>(i));
  }
  return out;
}

void Task::check_action(const GroundAction& a) const {
  if (a.action >= domain->actions.size()) throw ModelError("unknown action id");
  const auto& schema = domain->actions[a.action];
  if (a.arity != schema.arity()) {
    throw ModelError("action " + schema.name + " applied to wrong number of objects");
  }
  for (std::size_t i = 0; i < a.arity; ++i) {
    if (a.args[i] >= object_types.size() ||
        !domain->is_subtype(object_types[a.args[i]], schema.parameter_types[i])) {
      throw ModelError("ill-typed argument " + std::to_string(i) + " for action " +
                       schema.name);
    }
  }
}

Operator canonical_operator_form(const Operator& op) {
  std::vector<int> remap(op.arity(), -1);
  VarId next = 0;
  for (VarId v : op.action_binding) {
    if (remap[v] < 0) remap[v] = next++;
  }
  for (std::size_t v = 0; v < op.arity(); ++v) {
    if (remap[v] < 0) remap[v] = next++;
  }
  Operator out;
  out.name = op.name;
  out.action = op.action;
  out.conflict = op.conflict;
  out.parameter_names.resize(op.arity());
  out.parameter_types.resize(op.arity());
  for (std::size_t v = 0; v < op.arity(); ++v) {
    out.parameter_names[remap[v]] = op.parameter_names[v];
    out.parameter_types[remap[v]] = op.parameter_types[v];
  }
  auto rename = [&](LiftedAtom a) {
    for (std::size_t i = 0; i < a.arity; ++i) a.vars[i] = static_cast<VarId>(remap[a.vars[i]]);
    return a;
  };
  for (const auto& l : op.preconditions) out.preconditions.push_back({rename(l.atom), l.positive});
  for (const auto& a : op.add_effects) out.add_effects.push_back(rename(a));
  for (const auto& a : op.delete_effects) out.delete_effects.push_back(rename(a));
  for (VarId v : op.action_binding) out.action_binding.push_back(static_cast<VarId>(remap[v]));
  out.normalize();
  return out;
}

}  // namespace relearn
