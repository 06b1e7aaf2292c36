// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "ccu/working_memory.hpp"

namespace ccu {

struct Variable {
  std::string name;
  friend bool operator==(const Variable&, const Variable&) = default;
};

using Term = std::variant<Variable, Datum>;

/// One `(subject, attribute, value)` test. A negated condition holds when no
/// element matches it; variables that only occur inside it are local to it.
struct Condition {
  Term subject;
  std::string attribute;
  Term value;
  bool negated = false;
};

using Pattern = std::vector<Condition>;
using Bindings = std::map<std::string, Datum>;

/// All distinct bindings that satisfy every condition, sorted by the tuple of
/// bound values in variable-name order. Throws MalformedPattern when some
/// condition's subject is not reachable from the root or a constant node.
std::vector<Bindings> match_pattern(const WorkingMemory& memory, const Pattern& pattern);

/// Variables bound by the positive conditions of a pattern.
std::vector<std::string> bound_variables(const Pattern& pattern);

/// Deterministic string form of a binding; node ids are zero-padded so that
/// string order agrees with numeric order.
std::string tie_key(const Bindings& bindings);

std::string to_text(const Term& term);
std::string to_text(const Condition& condition);

}  // namespace ccu
