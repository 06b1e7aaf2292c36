// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ccu/pattern.hpp"

namespace ccu {

enum class ActionKind { add, remove, emit };

/// A memory edit or output command, parameterized by the rule's variables.
///   add(<s>, attr, value)     value bound to a node becomes a link
///   remove(<s>, attr, value)  removes every matching element (and its subtree)
///   emit(kind, args...)       enqueues an output command on the io output queue
struct Action {
  ActionKind kind = ActionKind::add;
  Term subject;
  std::string attribute;
  Term value;
  std::string command;
  std::vector<Term> args;
};

struct Rule {
  std::string id;
  int priority = 0;
  Pattern conditions;
  std::vector<Action> actions;
  /// Operator rules compete for selection; elaborations (`elaborate` blocks)
  /// apply every match at the start of a cycle.
  bool proposes_operator = true;
  int line = 0;
};

class Ruleset {
 public:
  Ruleset() = default;
  explicit Ruleset(std::vector<Rule> rules);

  const std::vector<Rule>& rules() const noexcept { return rules_; }
  const Rule* find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }
  std::size_t size() const noexcept { return rules_.size(); }
  bool empty() const noexcept { return rules_.empty(); }

 private:
  std::vector<Rule> rules_;
};

/// Parses a ruleset document.
///
///   # comment
///   rule <id> [priority N]          (or `elaborate <id> [priority N]`)
///   when:
///     (<var|state|#id>, attribute, <var|literal>)
///     -(<var>, attribute, <var|literal>)
///   then:
///     add(...) / remove(...) / emit(kind, args...)
///
/// Literals are bare words, double-quoted strings, integers, reals or
/// true/false. Throws ParseError (with line), DuplicateRuleId or
/// UnboundActionVariable.
Ruleset load_rules(std::string_view document);

/// Reads and parses a ruleset file.
Ruleset load_rules_file(const std::string& path);

std::string to_text(const Action& action);

}  // namespace ccu
