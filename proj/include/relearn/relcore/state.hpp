#pragma once

#include <algorithm>
#include <vector>

#include "relearn/relcore/symbols.hpp"

namespace relearn {

// Set of true ground atoms; everything absent is false (closed world).
// Stored sorted and deduplicated, so equality is structural.
class State {
 public:
  State() = default;
  explicit State(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    std::sort(atoms_.begin(), atoms_.end());
    atoms_.erase(std::unique(atoms_.begin(), atoms_.end()), atoms_.end());
  }

  bool contains(const Atom& a) const {
    return std::binary_search(atoms_.begin(), atoms_.end(), a);
  }

  void insert(const Atom& a) {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), a);
    if (it == atoms_.end() || *it != a) atoms_.insert(it, a);
  }

  void erase(const Atom& a) {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), a);
    if (it != atoms_.end() && *it == a) atoms_.erase(it);
  }

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  auto begin() const { return atoms_.begin(); }
  auto end() const { return atoms_.end(); }

  friend bool operator==(const State&, const State&) = default;

 private:
  std::vector<Atom> atoms_;
};

// Atoms in `a` but not in `b`, in sorted order.
inline std::vector<Atom> state_difference(const State& a, const State& b) {
  std::vector<Atom> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

}  // namespace relearn
