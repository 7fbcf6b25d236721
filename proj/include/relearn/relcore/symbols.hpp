#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

namespace relearn {

using TypeId = std::uint16_t;
using PredicateId = std::uint16_t;
using ObjectId = std::uint16_t;
using ActionId = std::uint16_t;
using VarId = std::uint8_t;

// Upper bound on predicate and action arity accepted by the parser.
inline constexpr std::size_t kMaxArity = 4;

// A predicate applied to objects. Unused argument slots stay zero so that
// the defaulted comparison is a total order on (predicate, arguments).
struct Atom {
  PredicateId predicate = 0;
  std::uint8_t arity = 0;
  std::array<ObjectId, kMaxArity> args{};

  std::span<const ObjectId> arguments() const { return {args.data(), arity}; }
  friend auto operator<=>(const Atom&, const Atom&) = default;
};

struct GroundLiteral {
  Atom atom;
  bool positive = true;
  friend auto operator<=>(const GroundLiteral&, const GroundLiteral&) = default;
};

// A predicate applied to operator variables.
struct LiftedAtom {
  PredicateId predicate = 0;
  std::uint8_t arity = 0;
  std::array<VarId, kMaxArity> vars{};

  std::span<const VarId> variables() const { return {vars.data(), arity}; }
  friend auto operator<=>(const LiftedAtom&, const LiftedAtom&) = default;
};

struct LiftedLiteral {
  LiftedAtom atom;
  bool positive = true;
  friend auto operator<=>(const LiftedLiteral&, const LiftedLiteral&) = default;
};

inline std::size_t hash_combine(std::size_t seed, std::size_t value) {
  return seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

struct AtomHash {
  std::size_t operator()(const Atom& a) const {
    std::size_t h = std::hash<std::uint32_t>{}(a.predicate);
    for (std::size_t i = 0; i < a.arity; ++i) h = hash_combine(h, a.args[i]);
    return h;
  }
};

}  // namespace relearn
