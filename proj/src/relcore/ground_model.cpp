#include "relearn/relcore/ground_model.hpp"

#include <algorithm>

namespace relearn {

std::size_t PackedState::hash() const {
  std::size_t h = words_.size();
  for (std::uint64_t w : words_) h = hash_combine(h, std::hash<std::uint64_t>{}(w));
  return h;
}

bool GroundGoal::satisfied_by(const PackedState& s) const {
  if (unsatisfiable) return false;
  for (auto id : pos) {
    if (!s.test(id)) return false;
  }
  for (auto id : neg) {
    if (s.test(id)) return false;
  }
  return true;
}

std::size_t GroundGoal::unsatisfied_count(const PackedState& s) const {
  std::size_t n = 0;
  for (auto id : pos) n += !s.test(id);
  for (auto id : neg) n += s.test(id);
  return n;
}

bool GroundOperator::applicable(const PackedState& s) const {
  for (auto id : pre_pos) {
    if (!s.test(id)) return false;
  }
  for (auto id : pre_neg) {
    if (s.test(id)) return false;
  }
  return true;
}

PackedState GroundOperator::apply(const PackedState& s) const {
  PackedState next = s;
  for (auto id : del) next.reset(id);
  for (auto id : add) next.set(id);
  return next;
}

namespace {

Atom ground(const LiftedAtom& a, const std::vector<ObjectId>& binding) {
  Atom g;
  g.predicate = a.predicate;
  g.arity = a.arity;
  for (std::size_t i = 0; i < a.arity; ++i) g.args[i] = binding[a.vars[i]];
  return g;
}

void sort_ids(std::vector<std::uint32_t>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

GroundModel::GroundModel(const Task& task, const AtomIndex& atoms, const ActionSpace& actions,
                         std::span<const Operator> ops)
    : num_atoms_(atoms.size()), by_action_(actions.size()) {
  const Domain& d = *task.domain;
  std::vector<std::vector<std::uint32_t>> per_schema(d.actions.size());
  for (std::uint32_t i = 0; i < actions.size(); ++i) per_schema[actions[i].action].push_back(i);

  for (std::uint32_t oi = 0; oi < ops.size(); ++oi) {
    const Operator& op = ops[oi];
    std::vector<bool> bound(op.arity(), false);
    for (VarId v : op.action_binding) bound[v] = true;
    std::vector<VarId> free_vars;
    std::vector<std::vector<ObjectId>> free_domains;
    for (std::size_t v = 0; v < op.arity(); ++v) {
      if (!bound[v]) {
        free_vars.push_back(static_cast<VarId>(v));
        free_domains.push_back(task.objects_of_type(op.parameter_types[v]));
      }
    }
    for (std::uint32_t ai : per_schema[op.action]) {
      const GroundAction& ga = actions[ai];
      std::vector<ObjectId> binding(op.arity(), 0);
      std::vector<bool> set(op.arity(), false);
      bool consistent = true;
      for (std::size_t j = 0; j < ga.arity && consistent; ++j) {
        VarId v = op.action_binding[j];
        if (set[v] && binding[v] != ga.args[j]) consistent = false;
        binding[v] = ga.args[j];
        set[v] = true;
      }
      if (!consistent) continue;
      for (std::size_t j = 0; j < ga.arity && consistent; ++j) {
        VarId v = op.action_binding[j];
        consistent = d.is_subtype(task.object_types[binding[v]], op.parameter_types[v]);
      }
      if (!consistent) continue;

      // Effect-only parameters range over all objects of their type.
      std::vector<std::size_t> pos(free_vars.size(), 0);
      bool empty_domain = false;
      for (const auto& dom : free_domains) empty_domain |= dom.empty();
      if (empty_domain) continue;
      auto advance = [&]() {
        for (std::size_t k = free_vars.size(); k-- > 0;) {
          if (++pos[k] < free_domains[k].size()) return true;
          pos[k] = 0;
        }
        return false;
      };
      do {
        for (std::size_t k = 0; k < free_vars.size(); ++k) binding[free_vars[k]] = free_domains[k][pos[k]];
        GroundOperator g;
        g.action = ai;
        g.op = oi;
        g.priority = static_cast<std::uint32_t>(op.preconditions.size());
        bool possible = true;
        for (const auto& l : op.preconditions) {
          auto id = atoms.id(ground(l.atom, binding));
          if (!id) {
            if (l.positive) possible = false;
            continue;
          }
          (l.positive ? g.pre_pos : g.pre_neg).push_back(*id);
        }
        for (const auto& a : op.add_effects) {
          if (auto id = atoms.id(ground(a, binding))) g.add.push_back(*id);
        }
        for (const auto& a : op.delete_effects) {
          if (auto id = atoms.id(ground(a, binding))) g.del.push_back(*id);
        }
        if (possible) {
          sort_ids(g.pre_pos);
          sort_ids(g.pre_neg);
          sort_ids(g.add);
          sort_ids(g.del);
          by_action_[ai].push_back(static_cast<std::uint32_t>(ground_.size()));
          ground_.push_back(std::move(g));
        }
      } while (advance());
    }
  }
  anchored_.resize(num_atoms_);
  for (std::uint32_t gi = 0; gi < ground_.size(); ++gi) {
    if (ground_[gi].pre_pos.empty()) {
      unanchored_.push_back(gi);
    } else {
      anchored_[ground_[gi].pre_pos.front()].push_back(gi);
    }
  }
}

void GroundModel::applicable(const PackedState& s, std::vector<std::uint32_t>& out) const {
  const std::size_t first = out.size();
  for (std::uint32_t gi : unanchored_) {
    if (ground_[gi].applicable(s)) out.push_back(gi);
  }
  const auto& words = s.words();
  for (std::size_t w = 0; w < words.size(); ++w) {
    std::uint64_t bits = words[w];
    while (bits) {
      auto id = static_cast<std::uint32_t>(w * 64 + static_cast<std::size_t>(__builtin_ctzll(bits)));
      bits &= bits - 1;
      for (std::uint32_t gi : anchored_[id]) {
        if (ground_[gi].applicable(s)) out.push_back(gi);
      }
    }
  }
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end());
}

std::int32_t GroundModel::select(const PackedState& s, std::uint32_t action, bool* ambiguous) const {
  std::int32_t best = -1;
  int matches = 0;
  for (std::uint32_t gi : by_action_[action]) {
    const GroundOperator& g = ground_[gi];
    if (!g.applicable(s)) continue;
    ++matches;
    if (best < 0 || g.priority > ground_[best].priority) {
      best = static_cast<std::int32_t>(gi);
    }
  }
  if (ambiguous) *ambiguous = matches > 1;
  return best;
}

PackedState GroundModel::predict(const PackedState& s, std::uint32_t action) const {
  std::int32_t gi = select(s, action);
  if (gi < 0) return s;
  return ground_[gi].apply(s);
}

TaskContext::TaskContext(std::shared_ptr<const Task> task)
    : task_(std::move(task)),
      atoms_(*task_),
      actions_(*task_),
      gt_(*task_, atoms_, actions_, task_->domain->gt_operators) {
  for (std::uint32_t a = 0; a < actions_.size(); ++a) {
    if (gt_.operators_for(a).size() > 1) {
      throw ModelError("domain " + task_->domain->name + ": several ground-truth operators for " +
                       to_string(*task_, actions_[a]));
    }
  }
}

PackedState TaskContext::pack(const State& s) const {
  PackedState p(atoms_.size());
  for (const Atom& a : s) {
    auto id = atoms_.id(a);
    if (!id) throw ModelError("atom " + to_string(*task_, a) + " is not type-consistent");
    p.set(*id);
  }
  return p;
}

State TaskContext::unpack(const PackedState& s) const {
  std::vector<Atom> atoms;
  const auto& words = s.words();
  for (std::size_t w = 0; w < words.size(); ++w) {
    std::uint64_t bits = words[w];
    while (bits) {
      int b = __builtin_ctzll(bits);
      atoms.push_back(atoms_.atom(static_cast<std::uint32_t>(w * 64 + b)));
      bits &= bits - 1;
    }
  }
  return State(std::move(atoms));
}

GroundGoal TaskContext::compile_goal(std::span<const GroundLiteral> goal) const {
  GroundGoal g;
  for (const auto& l : goal) {
    auto id = atoms_.id(l.atom);
    if (!id) {
      if (l.positive) g.unsatisfiable = true;
      continue;
    }
    (l.positive ? g.pos : g.neg).push_back(*id);
  }
  return g;
}

GroundModel TaskContext::compile(std::span<const Operator> ops) const {
  return GroundModel(*task_, atoms_, actions_, ops);
}

std::uint32_t TaskContext::action_index(const GroundAction& a) const {
  auto idx = actions_.index(a);
  if (!idx) {
    task_->check_action(a);
    throw ModelError("action " + to_string(*task_, a) + " is not in the action space");
  }
  return *idx;
}

}  // namespace relearn
