// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#include "ccu/pattern.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "ccu/error.hpp"

namespace ccu {

namespace {

bool is_variable(const Term& term) { return std::holds_alternative<Variable>(term); }

const std::string& var_name(const Term& term) { return std::get<Variable>(term).name; }

// Orders positive conditions so each subject is bound before it is expanded.
std::vector<const Condition*> plan_join(const Pattern& pattern) {
  if (pattern.empty()) {
    throw Error(ErrorCode::MalformedPattern, "empty pattern has no root");
  }
  std::vector<const Condition*> pending;
  std::vector<const Condition*> negated;
  for (const auto& condition : pattern) {
    if (!is_variable(condition.subject) &&
        !std::holds_alternative<NodeId>(std::get<Datum>(condition.subject))) {
      throw Error(ErrorCode::MalformedPattern,
                  "subject of " + to_text(condition) + " must be a variable or a node id");
    }
    (condition.negated ? negated : pending).push_back(&condition);
  }
  if (pending.empty()) {
    throw Error(ErrorCode::MalformedPattern, "pattern has no positive condition to root it");
  }

  std::set<std::string> grounded;
  std::vector<const Condition*> order;
  while (!pending.empty()) {
    auto ready = std::find_if(pending.begin(), pending.end(), [&](const Condition* c) {
      return !is_variable(c->subject) || grounded.contains(var_name(c->subject));
    });
    if (ready == pending.end()) {
      throw Error(ErrorCode::MalformedPattern,
                  "condition " + to_text(*pending.front()) + " is not connected to a bound subject");
    }
    const Condition* c = *ready;
    pending.erase(ready);
    if (is_variable(c->value)) {
      grounded.insert(var_name(c->value));
    }
    order.push_back(c);
  }
  for (const Condition* c : negated) {
    if (is_variable(c->subject) && !grounded.contains(var_name(c->subject))) {
      throw Error(ErrorCode::MalformedPattern,
                  "negated condition " + to_text(*c) + " has an unbound subject");
    }
  }
  return order;
}

std::optional<NodeId> resolve_subject(const Term& subject, const Bindings& bindings) {
  const Datum* datum = nullptr;
  if (is_variable(subject)) {
    auto it = bindings.find(var_name(subject));
    if (it == bindings.end()) {
      return std::nullopt;
    }
    datum = &it->second;
  } else {
    datum = &std::get<Datum>(subject);
  }
  if (const auto* id = std::get_if<NodeId>(datum)) {
    return *id;
  }
  return std::nullopt;
}

bool any_match(const WorkingMemory& memory, const Condition& condition, const Bindings& bindings) {
  auto subject = resolve_subject(condition.subject, bindings);
  if (!subject) {
    return false;
  }
  for (const Wme* wme : memory.children_with(*subject, condition.attribute)) {
    const Datum value = wme->datum();
    if (is_variable(condition.value)) {
      auto it = bindings.find(var_name(condition.value));
      if (it == bindings.end() || it->second == value) {
        return true;
      }
    } else if (std::get<Datum>(condition.value) == value) {
      return true;
    }
  }
  return false;
}

void join(const WorkingMemory& memory, const std::vector<const Condition*>& order, std::size_t depth,
          Bindings& bindings, const std::vector<const Condition*>& negated, std::set<Bindings>& out) {
  if (depth == order.size()) {
    for (const Condition* c : negated) {
      if (any_match(memory, *c, bindings)) {
        return;
      }
    }
    out.insert(bindings);
    return;
  }
  const Condition& condition = *order[depth];
  auto subject = resolve_subject(condition.subject, bindings);
  if (!subject) {
    return;
  }
  for (const Wme* wme : memory.children_with(*subject, condition.attribute)) {
    Datum value = wme->datum();
    if (!is_variable(condition.value)) {
      if (std::get<Datum>(condition.value) == value) {
        join(memory, order, depth + 1, bindings, negated, out);
      }
      continue;
    }
    const std::string& name = var_name(condition.value);
    auto it = bindings.find(name);
    if (it != bindings.end()) {
      if (it->second == value) {
        join(memory, order, depth + 1, bindings, negated, out);
      }
      continue;
    }
    bindings.emplace(name, std::move(value));
    join(memory, order, depth + 1, bindings, negated, out);
    bindings.erase(name);
  }
}

}  // namespace

std::vector<Bindings> match_pattern(const WorkingMemory& memory, const Pattern& pattern) {
  const auto order = plan_join(pattern);
  std::vector<const Condition*> negated;
  for (const auto& c : pattern) {
    if (c.negated) {
      negated.push_back(&c);
    }
  }
  std::set<Bindings> found;
  Bindings bindings;
  join(memory, order, 0, bindings, negated, found);
  return {found.begin(), found.end()};
}

std::vector<std::string> bound_variables(const Pattern& pattern) {
  std::set<std::string> names;
  for (const auto& c : pattern) {
    if (c.negated) {
      continue;
    }
    if (is_variable(c.subject)) {
      names.insert(var_name(c.subject));
    }
    if (is_variable(c.value)) {
      names.insert(var_name(c.value));
    }
  }
  return {names.begin(), names.end()};
}

std::string tie_key(const Bindings& bindings) {
  std::string key;
  for (const auto& [name, datum] : bindings) {
    key += name;
    key += '=';
    if (const auto* id = std::get_if<NodeId>(&datum)) {
      char buffer[32];
      std::snprintf(buffer, sizeof(buffer), "#%012llu", static_cast<unsigned long long>(raw(*id)));
      key += buffer;
    } else {
      key += to_text(datum);
    }
    key += ';';
  }
  return key;
}

std::string to_text(const Term& term) {
  if (is_variable(term)) {
    return "<" + var_name(term) + ">";
  }
  const Datum& datum = std::get<Datum>(term);
  if (const auto* s = std::get_if<std::string>(&datum)) {
    return "\"" + *s + "\"";
  }
  return to_text(datum);
}

std::string to_text(const Condition& condition) {
  return std::string(condition.negated ? "-" : "") + "(" + to_text(condition.subject) + ", " +
         condition.attribute + ", " + to_text(condition.value) + ")";
}

}  // namespace ccu
