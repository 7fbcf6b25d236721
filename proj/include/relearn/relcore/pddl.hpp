#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "relearn/relcore/domain.hpp"

namespace relearn {

// Parser diagnostic. Line and column are 1-based and point at the offending
// token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Accepts the :strips, :typing and :negative-preconditions subset.
// Every :action becomes both an action schema and a ground-truth operator.
Domain parse_domain(std::string_view text);

Task parse_problem(std::string_view text, std::shared_ptr<const Domain> domain);

std::string serialize_domain(const Domain& domain);
std::string serialize_problem(const Task& task);

// Writes `ops` as a domain whose :action entries are the given operators.
// Operator names are "<action>" or "<action>__op<k>"; the first parameters
// of each entry bind the action's arguments in order.
std::string serialize_operators(const Domain& domain,
                                std::span<const Operator> ops,
                                std::string_view name);

// Inverse of serialize_operators: reads an operator file against the
// vocabulary of `domain`. The returned operators reference `domain`'s action
// schemas.
std::vector<Operator> parse_operators(std::string_view text,
                                      const Domain& domain);

std::string read_file(const std::string& path);

}  // namespace relearn
