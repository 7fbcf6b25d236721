#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "relearn/relcore/state.hpp"
#include "relearn/relcore/symbols.hpp"

namespace relearn {

// Raised for malformed domain content detected outside the parser
// (bad operator construction, ill-typed action, and similar).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TypeInfo {
  std::string name;
  std::optional<TypeId> parent;  // empty only for the root type "object"
  friend bool operator==(const TypeInfo&, const TypeInfo&) = default;
};

struct PredicateSchema {
  std::string name;
  std::vector<TypeId> parameter_types;
  std::size_t arity() const { return parameter_types.size(); }
  friend bool operator==(const PredicateSchema&, const PredicateSchema&) = default;
};

struct ActionSchema {
  std::string name;
  std::vector<std::string> parameter_names;
  std::vector<TypeId> parameter_types;
  std::size_t arity() const { return parameter_types.size(); }
  friend bool operator==(const ActionSchema&, const ActionSchema&) = default;
};

// Lifted STRIPS operator. Variables are indices into `parameter_*`.
// `action_binding[i]` is the parameter bound to argument i of `action`.
struct Operator {
  std::string name;
  std::vector<std::string> parameter_names;
  std::vector<TypeId> parameter_types;
  std::vector<LiftedLiteral> preconditions;
  std::vector<LiftedAtom> add_effects;
  std::vector<LiftedAtom> delete_effects;
  ActionId action = 0;
  std::vector<VarId> action_binding;
  // Set by the learner when some negative example could not be excluded.
  bool conflict = false;

  std::size_t arity() const { return parameter_types.size(); }

  // Sorts and deduplicates literal lists. Every constructor path calls this,
  // which makes equality structural and serialization order stable.
  void normalize();

  friend bool operator==(const Operator&, const Operator&) = default;
};

class Domain {
 public:
  std::string name;
  std::vector<std::string> requirements;
  std::vector<TypeInfo> types;  // types[0] is "object"
  std::vector<PredicateSchema> predicates;
  std::vector<ActionSchema> actions;
  std::vector<Operator> gt_operators;

  std::optional<TypeId> find_type(std::string_view type_name) const;
  std::optional<PredicateId> find_predicate(std::string_view pred_name) const;
  std::optional<ActionId> find_action(std::string_view action_name) const;

  // True when `t` equals `ancestor` or descends from it.
  bool is_subtype(TypeId t, TypeId ancestor) const;

  // Checks the cross-references of every operator; throws ModelError.
  void validate() const;

  friend bool operator==(const Domain&, const Domain&) = default;
};

struct GroundAction {
  ActionId action = 0;
  std::uint8_t arity = 0;
  std::array<ObjectId, kMaxArity> args{};

  std::span<const ObjectId> arguments() const { return {args.data(), arity}; }
  friend auto operator<=>(const GroundAction&, const GroundAction&) = default;
};

class Task {
 public:
  std::string name;
  std::shared_ptr<const Domain> domain;
  // Object ids follow lexicographic name order.
  std::vector<std::string> object_names;
  std::vector<TypeId> object_types;
  State init;
  std::vector<GroundLiteral> goal;

  std::size_t num_objects() const { return object_names.size(); }
  std::optional<ObjectId> find_object(std::string_view object_name) const;
  // Objects whose type is `t` or a subtype of it, in id order.
  std::vector<ObjectId> objects_of_type(TypeId t) const;
  // Throws ModelError when the action's arguments do not fit its schema.
  void check_action(const GroundAction& a) const;
};

// Canonical operator in which action arguments occupy the first parameters
// in order. Effect-only parameters keep their relative order after them.
Operator canonical_operator_form(const Operator& op);

}  // namespace relearn
