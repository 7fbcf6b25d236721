#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "relearn/relcore/grounding.hpp"

namespace relearn {

// Bitset state over an AtomIndex.
class PackedState {
 public:
  PackedState() = default;
  explicit PackedState(std::size_t num_atoms)
      : words_((num_atoms + 63) / 64, 0) {}

  bool test(std::uint32_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }
  void set(std::uint32_t i) { words_[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
  void reset(std::uint32_t i) {
    words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
  }
  const std::vector<std::uint64_t>& words() const { return words_; }
  std::size_t hash() const;

  friend bool operator==(const PackedState&, const PackedState&) = default;

 private:
  std::vector<std::uint64_t> words_;
};

struct PackedStateHash {
  std::size_t operator()(const PackedState& s) const { return s.hash(); }
};

// Conjunctive goal over atom ids. A positive literal outside the index makes
// the goal unsatisfiable; a negative one is dropped as trivially true.
struct GroundGoal {
  std::vector<std::uint32_t> pos;
  std::vector<std::uint32_t> neg;
  bool unsatisfiable = false;

  bool satisfied_by(const PackedState& s) const;
  std::size_t unsatisfied_count(const PackedState& s) const;
};

struct GroundOperator {
  std::uint32_t action = 0;    // index into the ActionSpace
  std::uint32_t op = 0;        // index into the source operator list
  std::uint32_t priority = 0;  // precondition count of the lifted operator
  std::vector<std::uint32_t> pre_pos;
  std::vector<std::uint32_t> pre_neg;
  std::vector<std::uint32_t> add;
  std::vector<std::uint32_t> del;

  std::size_t num_preconditions() const { return pre_pos.size() + pre_neg.size(); }
  bool applicable(const PackedState& s) const;
  // Deletes first, then adds.
  PackedState apply(const PackedState& s) const;
};

// All groundings of an operator list for one task, indexed by ground action.
class GroundModel {
 public:
  GroundModel() = default;
  GroundModel(const Task& task, const AtomIndex& atoms,
              const ActionSpace& actions, std::span<const Operator> ops);

  std::size_t num_atoms() const { return num_atoms_; }
  std::size_t num_actions() const { return by_action_.size(); }
  const std::vector<GroundOperator>& operators() const { return ground_; }
  std::span<const std::uint32_t> operators_for(std::uint32_t action) const {
    return by_action_[action];
  }

  // Index of the ground operator that fires for `action`, or -1 when none
  // applies. With several candidates the one whose lifted operator has the
  // most preconditions wins, ties going to the lowest index; `ambiguous` reports that case.
  std::int32_t select(const PackedState& s, std::uint32_t action,
                      bool* ambiguous = nullptr) const;
  PackedState predict(const PackedState& s, std::uint32_t action) const;

  // Appends the indices of all ground operators applicable in `s`, in
  // increasing order.
  void applicable(const PackedState& s, std::vector<std::uint32_t>& out) const;

 private:
  std::size_t num_atoms_ = 0;
  std::vector<GroundOperator> ground_;
  std::vector<std::vector<std::uint32_t>> by_action_;
  // Ground operators keyed by their first positive precondition; operators
  // without one are always candidates.
  std::vector<std::vector<std::uint32_t>> anchored_;
  std::vector<std::uint32_t> unanchored_;
};

// Per-task immutable data shared by every component: the atom numbering,
// the ground action list, and the ground-truth model.
class TaskContext {
 public:
  explicit TaskContext(std::shared_ptr<const Task> task);

  const Task& task() const { return *task_; }
  const std::shared_ptr<const Task>& task_ptr() const { return task_; }
  const Domain& domain() const { return *task_->domain; }
  const AtomIndex& atoms() const { return atoms_; }
  const ActionSpace& actions() const { return actions_; }
  const GroundModel& gt_model() const { return gt_; }

  PackedState pack(const State& s) const;
  State unpack(const PackedState& s) const;
  GroundGoal compile_goal(std::span<const GroundLiteral> goal) const;
  GroundModel compile(std::span<const Operator> ops) const;
  std::uint32_t action_index(const GroundAction& a) const;

 private:
  std::shared_ptr<const Task> task_;
  AtomIndex atoms_;
  ActionSpace actions_;
  GroundModel gt_;
};

}  // namespace relearn
