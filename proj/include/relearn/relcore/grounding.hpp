#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relearn/relcore/domain.hpp"

namespace relearn {

// Every action schema instantiated with every type-consistent object tuple,
// ordered by schema name and then by argument names.
std::vector<GroundAction> enumerate_ground_actions(const Task& task);

// Number of type-consistent ground atoms of the task's predicates.
std::size_t count_ground_atoms(const Task& task);

// True iff every positive literal is in the state and every negative one is
// absent.
bool holds(const State& state, std::span<const GroundLiteral> literals);

// Dense numbering of all type-consistent ground atoms of a task.
class AtomIndex {
 public:
  explicit AtomIndex(const Task& task);

  std::size_t size() const { return size_; }
  std::optional<std::uint32_t> id(const Atom& atom) const;
  Atom atom(std::uint32_t id) const;

 private:
  struct Slot {
    std::uint32_t offset = 0;
    std::uint32_t count = 0;
    // Per argument: position of each object within the parameter's type
    // list, or -1 when the object does not have that type.
    std::vector<std::vector<std::int32_t>> position;
    std::vector<std::vector<ObjectId>> members;
  };
  std::vector<Slot> slots_;
  std::size_t size_ = 0;
};

// Indexed list of ground actions for a task.
class ActionSpace {
 public:
  explicit ActionSpace(const Task& task);

  std::size_t size() const { return actions_.size(); }
  const GroundAction& operator[](std::size_t i) const { return actions_[i]; }
  const std::vector<GroundAction>& actions() const { return actions_; }
  std::optional<std::uint32_t> index(const GroundAction& a) const;

 private:
  std::vector<GroundAction> actions_;
  std::vector<std::uint32_t> sorted_;  // indices ordered by operator<
};

// Text helpers used in logs, plan files and error messages.
std::string to_string(const Task& task, const Atom& atom);
std::string to_string(const Task& task, const GroundLiteral& literal);
std::string to_string(const Task& task, const GroundAction& action);
std::string to_string(const Domain& domain, const Operator& op,
                      const LiftedLiteral& literal);

}  // namespace relearn
