// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#include "ccu/rules.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "ccu/error.hpp"

namespace ccu {

namespace {

std::string_view trim(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
    text.remove_prefix(1);
  }
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
    text.remove_suffix(1);
  }
  return text;
}

// Strips a trailing `#` comment that is not inside quotes and not an id (`#12`).
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) {
      quoted = !quoted;
    } else if (c == '#' && !quoted) {
      bool is_id = i + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[i + 1]));
      if (!is_id) {
        return line.substr(0, i);
      }
    }
  }
  return line;
}

class LineParser {
 public:
  LineParser(std::string_view text, int line) : text_(text), line_(line) {}

  [[noreturn]] void fail(const std::string& reason) const {
    throw Error(ErrorCode::ParseError, reason, line_);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool done() {
    skip_space();
    return pos_ >= text_.size();
  }

  bool consume(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!consume(c)) {
      fail(std::string("expected '") + c + "'");
    }
  }

  std::string word() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '(' || c == ')') {
        break;
      }
      ++pos_;
    }
    if (start == pos_) {
      fail("expected a word");
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string quoted() {
    expect('"');
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
        ++pos_;
      }
      out += text_[pos_++];
    }
    if (pos_ >= text_.size()) {
      fail("unterminated string literal");
    }
    ++pos_;
    return out;
  }

  bool peek(char c) {
    skip_space();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  std::string label() { return peek('"') ? quoted() : word(); }

  Term term(bool subject_position) {
    skip_space();
    if (peek('"')) {
      return Datum{quoted()};
    }
    if (peek('<')) {
      ++pos_;
      std::size_t end = text_.find('>', pos_);
      if (end == std::string_view::npos) {
        fail("unterminated variable");
      }
      std::string name(trim(text_.substr(pos_, end - pos_)));
      if (name.empty()) {
        fail("empty variable name");
      }
      pos_ = end + 1;
      return Variable{name};
    }
    std::string token = word();
    if (token.size() > 1 && token[0] == '#') {
      std::uint64_t id = 0;
      auto [ptr, ec] = std::from_chars(token.data() + 1, token.data() + token.size(), id);
      if (ec != std::errc() || ptr != token.data() + token.size()) {
        fail("bad node id '" + token + "'");
      }
      return Datum{NodeId{id}};
    }
    if (subject_position) {
      if (token == "state") {
        return Datum{kRootId};
      }
      fail("subject must be a variable, 'state' or a node id, got '" + token + "'");
    }
    if (token == "true") {
      return Datum{true};
    }
    if (token == "false") {
      return Datum{false};
    }
    std::int64_t integer = 0;
    auto [iptr, iec] = std::from_chars(token.data(), token.data() + token.size(), integer);
    if (iec == std::errc() && iptr == token.data() + token.size()) {
      return Datum{integer};
    }
    double real = 0;
    auto [rptr, rec] = std::from_chars(token.data(), token.data() + token.size(), real);
    if (rec == std::errc() && rptr == token.data() + token.size()) {
      return Datum{real};
    }
    return Datum{token};
  }

  Condition condition() {
    Condition c;
    c.negated = consume('-');
    expect('(');
    c.subject = term(true);
    expect(',');
    c.attribute = label();
    expect(',');
    c.value = term(false);
    expect(')');
    return c;
  }

  Action action() {
    Action a;
    std::string verb = word();
    expect('(');
    if (verb == "add" || verb == "remove") {
      a.kind = verb == "add" ? ActionKind::add : ActionKind::remove;
      a.subject = term(true);
      expect(',');
      a.attribute = label();
      expect(',');
      a.value = term(false);
    } else if (verb == "emit") {
      a.kind = ActionKind::emit;
      a.command = label();
      while (consume(',')) {
        a.args.push_back(term(false));
      }
    } else {
      fail("unknown action '" + verb + "'");
    }
    expect(')');
    return a;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_;
};

void collect_vars(const Term& term, std::vector<std::string>& out) {
  if (const auto* v = std::get_if<Variable>(&term)) {
    out.push_back(v->name);
  }
}

void validate_rule(const Rule& rule) {
  if (rule.conditions.empty()) {
    throw Error(ErrorCode::ParseError, "rule '" + rule.id + "' has no conditions", rule.line);
  }
  if (rule.actions.empty()) {
    throw Error(ErrorCode::ParseError, "rule '" + rule.id + "' has no actions", rule.line);
  }
  try {
    WorkingMemory empty;
    (void)match_pattern(empty, rule.conditions);
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, "rule '" + rule.id + "': " + e.what(), rule.line);
  }
  const auto bound = bound_variables(rule.conditions);
  for (const auto& action : rule.actions) {
    std::vector<std::string> used;
    if (action.kind != ActionKind::emit) {
      collect_vars(action.subject, used);
      collect_vars(action.value, used);
    }
    for (const auto& arg : action.args) {
      collect_vars(arg, used);
    }
    for (const auto& name : used) {
      if (!std::binary_search(bound.begin(), bound.end(), name)) {
        throw Error(ErrorCode::UnboundActionVariable,
                    "rule '" + rule.id + "' action " + to_text(action) + " uses <" + name +
                        "> which no positive condition binds",
                    rule.line);
      }
    }
  }
}

}  // namespace

Ruleset::Ruleset(std::vector<Rule> rules) : rules_(std::move(rules)) {
  std::set<std::string> seen;
  for (const auto& rule : rules_) {
    if (!seen.insert(rule.id).second) {
      throw Error(ErrorCode::DuplicateRuleId, "duplicate rule id '" + rule.id + "'", rule.line);
    }
  }
}

const Rule* Ruleset::find(std::string_view id) const {
  for (const auto& rule : rules_) {
    if (rule.id == id) {
      return &rule;
    }
  }
  return nullptr;
}

Ruleset load_rules(std::string_view document) {
  enum class Section { none, when, then };
  std::vector<Rule> rules;
  std::optional<Rule> current;
  Section section = Section::none;
  std::set<std::string> ids;

  auto finish = [&] {
    if (current) {
      validate_rule(*current);
      rules.push_back(std::move(*current));
      current.reset();
    }
  };

  std::istringstream in{std::string(document)};
  std::string raw_line;
  int line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    std::string_view line = trim(strip_comment(raw_line));
    if (line.empty()) {
      continue;
    }
    LineParser parser(line, line_no);

    if (line.starts_with("rule ") || line.starts_with("elaborate ") || line == "rule" ||
        line == "elaborate") {
      finish();
      Rule rule;
      rule.line = line_no;
      rule.proposes_operator = parser.word() == "rule";
      if (parser.done()) {
        parser.fail("rule header needs an id");
      }
      rule.id = parser.word();
      if (!parser.done()) {
        if (parser.word() != "priority" || parser.done()) {
          parser.fail("expected 'priority N' after rule id");
        }
        std::string number = parser.word();
        auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), rule.priority);
        if (ec != std::errc() || ptr != number.data() + number.size()) {
          parser.fail("priority must be an integer, got '" + number + "'");
        }
        if (!parser.done()) {
          parser.fail("unexpected text after priority");
        }
      }
      if (!ids.insert(rule.id).second) {
        throw Error(ErrorCode::DuplicateRuleId, "duplicate rule id '" + rule.id + "'", line_no);
      }
      current = std::move(rule);
      section = Section::none;
      continue;
    }

    if (!current) {
      parser.fail("expected a 'rule <id>' header");
    }
    if (line.starts_with("when:")) {
      section = Section::when;
      line.remove_prefix(5);
    } else if (line.starts_with("then:")) {
      section = Section::then;
      line.remove_prefix(5);
    }
    LineParser body(line, line_no);
    while (!body.done()) {
      switch (section) {
        case Section::when:
          current->conditions.push_back(body.condition());
          break;
        case Section::then:
          current->actions.push_back(body.action());
          break;
        case Section::none:
          body.fail("expected 'when:' or 'then:'");
      }
    }
  }
  finish();
  return Ruleset(std::move(rules));
}

Ruleset load_rules_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw Error(ErrorCode::ParseError, "cannot open ruleset '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return load_rules(buffer.str());
}

std::string to_text(const Action& action) {
  switch (action.kind) {
    case ActionKind::add:
    case ActionKind::remove: {
      std::string verb = action.kind == ActionKind::add ? "add" : "remove";
      return verb + "(" + to_text(action.subject) + ", " + action.attribute + ", " +
             to_text(action.value) + ")";
    }
    case ActionKind::emit: {
      std::string out = "emit(" + action.command;
      for (const auto& arg : action.args) {
        out += ", " + to_text(arg);
      }
      return out + ")";
    }
  }
  return {};
}

}  // namespace ccu
