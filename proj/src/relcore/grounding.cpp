#include "relearn/relcore/grounding.hpp"

#include <algorithm>
#include <numeric>

namespace relearn {

namespace {

// Calls `emit` for every tuple in the cartesian product of `lists`, in
// lexicographic order.
template <typename F>
void for_each_tuple(const std::vector<std::vector<ObjectId>>& lists, F&& emit) {
  for (const auto& l : lists) {
    if (l.empty()) return;
  }
  std::vector<std::size_t> pos(lists.size(), 0);
  std::array<ObjectId, kMaxArity> tuple{};
  while (true) {
    for (std::size_t i = 0; i < lists.size(); ++i) tuple[i] = lists[i][pos[i]];
    emit(tuple);
    std::size_t i = lists.size();
    while (i > 0) {
      --i;
      if (++pos[i] < lists[i].size()) break;
      pos[i] = 0;
      if (i == 0) return;
    }
    if (lists.empty()) return;
  }
}

}  // namespace

std::vector<GroundAction> enumerate_ground_actions(const Task& task) {
  const Domain& d = *task.domain;
  std::vector<ActionId> order(d.actions.size());
  std::iota(order.begin(), order.end(), ActionId{0});
  std::sort(order.begin(), order.end(), [&](ActionId a, ActionId b) {
    return d.actions[a].name < d.actions[b].name;
  });
  std::vector<GroundAction> out;
  for (ActionId id : order) {
    const auto& schema = d.actions[id];
    std::vector<std::vector<ObjectId>> lists;
    for (TypeId t : schema.parameter_types) lists.push_back(task.objects_of_type(t));
    for_each_tuple(lists, [&](const std::array<ObjectId, kMaxArity>& tuple) {
      GroundAction g;
      g.action = id;
      g.arity = static_cast<std::uint8_t>(schema.arity());
      g.args = tuple;
      out.push_back(g);
    });
  }
  return out;
}

std::size_t count_ground_atoms(const Task& task) {
  const Domain& d = *task.domain;
  std::size_t total = 0;
  for (const auto& p : d.predicates) {
    std::size_t n = 1;
    for (TypeId t : p.parameter_types) n *= task.objects_of_type(t).size();
    total += n;
  }
  return total;
}

bool holds(const State& state, std::span<const GroundLiteral> literals) {
  for (const auto& l : literals) {
    if (state.contains(l.atom) != l.positive) return false;
  }
  return true;
}

AtomIndex::AtomIndex(const Task& task) {
  const Domain& d = *task.domain;
  std::uint32_t offset = 0;
  for (const auto& p : d.predicates) {
    Slot slot;
    slot.offset = offset;
    std::uint32_t count = 1;
    for (TypeId t : p.parameter_types) {
      auto members = task.objects_of_type(t);
      std::vector<std::int32_t> pos(task.num_objects(), -1);
      for (std::size_t i = 0; i < members.size(); ++i) pos[members[i]] = static_cast<std::int32_t>(i);
      count *= static_cast<std::uint32_t>(members.size());
      slot.position.push_back(std::move(pos));
      slot.members.push_back(std::move(members));
    }
    slot.count = count;
    offset += count;
    slots_.push_back(std::move(slot));
  }
  size_ = offset;
}

std::optional<std::uint32_t> AtomIndex::id(const Atom& atom) const {
  if (atom.predicate >= slots_.size()) return std::nullopt;
  const Slot& slot = slots_[atom.predicate];
  if (atom.arity != slot.position.size()) return std::nullopt;
  std::uint32_t local = 0;
  for (std::size_t i = 0; i < atom.arity; ++i) {
    if (atom.args[i] >= slot.position[i].size()) return std::nullopt;
    std::int32_t p = slot.position[i][atom.args[i]];
    if (p < 0) return std::nullopt;
    local = local * static_cast<std::uint32_t>(slot.members[i].size()) +
            static_cast<std::uint32_t>(p);
  }
  return slot.offset + local;
}

Atom AtomIndex::atom(std::uint32_t id) const {
  auto it = std::upper_bound(slots_.begin(), slots_.end(), id,
                             [](std::uint32_t v, const Slot& s) { return v < s.offset; });
  // Empty slots share their offset with a neighbour; the id belongs to the
  // last non-empty slot starting at or before it.
  std::size_t p = static_cast<std::size_t>(it - slots_.begin()) - 1;
  while (slots_[p].count == 0) --p;
  const Slot& slot = slots_[p];
  Atom a;
  a.predicate = static_cast<PredicateId>(p);
  a.arity = static_cast<std::uint8_t>(slot.members.size());
  std::uint32_t local = id - slot.offset;
  for (std::size_t i = slot.members.size(); i > 0; --i) {
    const auto& m = slot.members[i - 1];
    a.args[i - 1] = m[local % m.size()];
    local /= static_cast<std::uint32_t>(m.size());
  }
  return a;
}

ActionSpace::ActionSpace(const Task& task) : actions_(enumerate_ground_actions(task)) {
  sorted_.resize(actions_.size());
  std::iota(sorted_.begin(), sorted_.end(), 0U);
  std::sort(sorted_.begin(), sorted_.end(),
            [&](std::uint32_t a, std::uint32_t b) { return actions_[a] < actions_[b]; });
}

std::optional<std::uint32_t> ActionSpace::index(const GroundAction& a) const {
  auto it = std::lower_bound(sorted_.begin(), sorted_.end(), a,
                             [&](std::uint32_t i, const GroundAction& v) { return actions_[i] < v; });
  if (it == sorted_.end() || actions_[*it] != a) return std::nullopt;
  return *it;
}

std::string to_string(const Task& task, const Atom& atom) {
  std::string s = "(" + task.domain->predicates[atom.predicate].name;
  for (std::size_t i = 0; i < atom.arity; ++i) s += " " + task.object_names[atom.args[i]];
  return s + ")";
}

std::string to_string(const Task& task, const GroundLiteral& literal) {
  if (literal.positive) return to_string(task, literal.atom);
  return "(not " + to_string(task, literal.atom) + ")";
}

std::string to_string(const Task& task, const GroundAction& action) {
  std::string s = "(" + task.domain->actions[action.action].name;
  for (std::size_t i = 0; i < action.arity; ++i) s += " " + task.object_names[action.args[i]];
  return s + ")";
}

std::string to_string(const Domain& domain, const Operator& op, const LiftedLiteral& literal) {
  std::string s = "(" + domain.predicates[literal.atom.predicate].name;
  for (std::size_t i = 0; i < literal.atom.arity; ++i) {
    VarId v = literal.atom.vars[i];
    s += " " + (v < op.parameter_names.size() ? op.parameter_names[v] : "?x" + std::to_string(v));
  }
  s += ")";
  return literal.positive ? s : "(not " + s + ")";
}

}  // namespace relearn
