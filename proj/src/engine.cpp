// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#include "ccu/engine.hpp"

#include <algorithm>

#include "ccu/error.hpp"

namespace ccu {

namespace {

Datum resolve(const Term& term, const Bindings& bindings) {
  if (const auto* var = std::get_if<Variable>(&term)) {
    return bindings.at(var->name);
  }
  return std::get<Datum>(term);
}

std::string datum_label(const WorkingMemory& memory, const Datum& datum) {
  if (const auto* id = std::get_if<NodeId>(&datum)) {
    return describe_node(memory, *id);
  }
  if (const auto* s = std::get_if<std::string>(&datum)) {
    return "\"" + *s + "\"";
  }
  return to_text(datum);
}

std::string edit_value(const WorkingMemory& memory, const Wme& wme) {
  switch (wme.kind()) {
    case ValueKind::node: return "(node)";
    case ValueKind::link: return "-> " + describe_node(memory, std::get<Link>(wme.value).target);
    default: return to_text(wme.datum());
  }
}

std::vector<std::string> render_facts(const WorkingMemory& memory, const Rule& rule,
                                      const Bindings& bindings) {
  std::vector<std::string> facts;
  for (const auto& condition : rule.conditions) {
    const Datum subject = resolve(condition.subject, bindings);
    std::string sentence = datum_label(memory, subject);
    if (condition.negated) {
      sentence += " has no " + condition.attribute;
      if (const auto* var = std::get_if<Variable>(&condition.value);
          var == nullptr || bindings.contains(var->name)) {
        sentence += " " + datum_label(memory, resolve(condition.value, bindings));
      }
    } else {
      sentence += " has " + condition.attribute + " " +
                  datum_label(memory, resolve(condition.value, bindings));
    }
    facts.push_back(std::move(sentence));
  }
  return facts;
}

NodeId require_node_datum(const Datum& datum, const std::string& what) {
  if (const auto* id = std::get_if<NodeId>(&datum)) {
    return *id;
  }
  throw Error(ErrorCode::ActionFailed, what + " is not a node: " + to_text(datum));
}

NodeId output_queue(WorkingMemory& memory) {
  auto io = memory.node_of(memory.root(), "io");
  NodeId io_node = io ? *io : memory.add_node(memory.root(), "io");
  auto out = memory.node_of(io_node, "output");
  return out ? *out : memory.add_node(io_node, "output");
}

Value to_value(const Datum& datum) {
  return std::visit(
      [](const auto& v) -> Value {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NodeId>) {
          return Link{v};
        } else {
          return v;
        }
      },
      datum);
}

void record_add(const WorkingMemory& memory, NodeId id, Firing& firing) {
  const Wme& wme = memory.get(id);
  firing.edits.push_back(
      {AppliedEdit::Op::add, id, *wme.parent, wme.attribute, edit_value(memory, wme)});
}

void apply_actions(WorkingMemory& memory, const Rule& rule, Firing& firing, int cycle) {
  const Bindings& bindings = firing.bindings;
  for (const auto& action : rule.actions) {
    switch (action.kind) {
      case ActionKind::add: {
        NodeId subject = require_node_datum(resolve(action.subject, bindings), "add subject");
        NodeId id = memory.add_wme(subject, action.attribute, to_value(resolve(action.value, bindings)));
        record_add(memory, id, firing);
        break;
      }
      case ActionKind::remove: {
        NodeId subject = require_node_datum(resolve(action.subject, bindings), "remove subject");
        const Datum target = resolve(action.value, bindings);
        std::vector<NodeId> victims;
        for (const Wme* wme : memory.children_with(subject, action.attribute)) {
          if (wme->datum() == target) {
            victims.push_back(wme->id);
          }
        }
        if (victims.empty()) {
          throw Error(ErrorCode::ActionFailed, "nothing to remove for " + to_text(action));
        }
        for (NodeId victim : victims) {
          if (!memory.contains(victim)) {
            continue;
          }
          const Wme& wme = memory.get(victim);
          firing.edits.push_back({AppliedEdit::Op::remove, victim, *wme.parent, wme.attribute,
                                  edit_value(memory, wme)});
          memory.remove_wme(victim);
        }
        break;
      }
      case ActionKind::emit: {
        const NodeId queue = output_queue(memory);
        std::int64_t seq = 1;
        for (const Wme* entry : memory.children_with(queue, "command")) {
          if (auto s = memory.value_of(entry->id, "seq"); s && std::holds_alternative<std::int64_t>(*s)) {
            seq = std::max(seq, std::get<std::int64_t>(*s) + 1);
          }
        }
        EmittedCommand command;
        command.kind = action.command;
        command.queue_seq = seq;
        command.entry = memory.add_node(queue, "command");
        memory.add_wme(command.entry, "seq", seq);
        memory.add_wme(command.entry, "kind", action.command);
        memory.add_wme(command.entry, "rule", rule.id);
        memory.add_wme(command.entry, "cycle", std::int64_t{cycle});
        int index = 1;
        for (const auto& arg : action.args) {
          Datum value = resolve(arg, bindings);
          memory.add_wme(command.entry, "arg" + std::to_string(index++), to_value(value));
          command.args.push_back(std::move(value));
        }
        firing.emitted.push_back(std::move(command));
        break;
      }
    }
  }
}

bool selection_before(const Proposal& a, const Proposal& b) {
  if (a.priority != b.priority) {
    return a.priority > b.priority;
  }
  if (a.tie_key != b.tie_key) {
    return a.tie_key < b.tie_key;
  }
  return a.rule_id < b.rule_id;
}

}  // namespace

const Firing* CycleRecord::selected() const {
  for (const auto& firing : firings) {
    if (firing.is_operator) {
      return &firing;
    }
  }
  return nullptr;
}

std::size_t DecisionTrace::firing_count() const {
  std::size_t n = 0;
  for (const auto& cycle : cycles) {
    n += cycle.firings.size();
  }
  return n;
}

std::string describe_node(const WorkingMemory& memory, NodeId id) {
  if (id == memory.root()) {
    return "state";
  }
  const Wme* wme = memory.find(id);
  if (wme == nullptr) {
    return "#" + std::to_string(raw(id));
  }
  if (auto name = memory.string_of(id, "name")) {
    return wme->attribute + " \"" + *name + "\"";
  }
  if (auto index = memory.value_of(id, "index")) {
    return wme->attribute + " " + to_text(*index);
  }
  auto process = memory.string_of(id, "process");
  auto material = memory.string_of(id, "material");
  auto object = memory.string_of(id, "object");
  if (process && material && object) {
    return wme->attribute + " " + *process + "/" + *material + "/" + *object;
  }
  return wme->attribute;
}

CycleOutcome run_cycle(WorkingMemory& memory, const Ruleset& ruleset, DecisionTrace& trace) {
  CycleRecord record;
  record.cycle = trace.cycles.empty() ? 1 : trace.cycles.back().cycle + 1;
  ++trace.cycles_attempted;

  // Elaborations: match everything against the cycle's starting state.
  std::vector<Firing> elaborations;
  for (const auto& rule : ruleset.rules()) {
    if (rule.proposes_operator) {
      continue;
    }
    for (auto& bindings : match_pattern(memory, rule.conditions)) {
      Firing firing;
      firing.rule_id = rule.id;
      firing.is_operator = false;
      firing.facts = render_facts(memory, rule, bindings);
      firing.bindings = std::move(bindings);
      elaborations.push_back(std::move(firing));
    }
  }

  memory.begin();
  std::string current;  // rule being applied, for the error message
  try {
    for (auto& firing : elaborations) {
      current = firing.rule_id;
      apply_actions(memory, *ruleset.find(firing.rule_id), firing, record.cycle);
      record.firings.push_back(std::move(firing));
    }
    current.clear();

    for (const auto& rule : ruleset.rules()) {
      if (!rule.proposes_operator) {
        continue;
      }
      for (auto& bindings : match_pattern(memory, rule.conditions)) {
        Proposal proposal;
        proposal.rule_id = rule.id;
        proposal.priority = rule.priority;
        proposal.tie_key = tie_key(bindings);
        proposal.bindings = std::move(bindings);
        record.proposals.push_back(std::move(proposal));
      }
    }
    std::sort(record.proposals.begin(), record.proposals.end(), selection_before);

    if (!record.proposals.empty()) {
      const Proposal& chosen = record.proposals.front();
      const Rule& rule = *ruleset.find(chosen.rule_id);
      Firing firing;
      firing.rule_id = rule.id;
      firing.is_operator = true;
      firing.bindings = chosen.bindings;
      firing.facts = render_facts(memory, rule, firing.bindings);
      current = firing.rule_id;
      apply_actions(memory, rule, firing, record.cycle);
      current.clear();
      record.firings.push_back(std::move(firing));
    }
  } catch (const Error& e) {
    memory.rollback();
    std::string where = current.empty() ? "matching" : "rule '" + current + "'";
    throw Error(ErrorCode::ActionFailed,
                "cycle " + std::to_string(record.cycle) + ", " + where + ": " + e.what());
  } catch (...) {
    memory.rollback();
    throw;
  }
  memory.commit();

  if (record.firings.empty()) {
    return {false};
  }
  trace.cycles.push_back(std::move(record));
  return {true};
}

DecisionTrace run_to_quiescence(WorkingMemory& memory, const Ruleset& ruleset, int max_cycles,
                                const OutputHandler& on_output) {
  if (max_cycles < 1) {
    throw Error(ErrorCode::BadRequest, "max_cycles must be at least 1");
  }
  DecisionTrace trace;
  for (int i = 0; i < max_cycles; ++i) {
    if (!run_cycle(memory, ruleset, trace).fired) {
      trace.quiescent = true;
      break;
    }
    if (on_output) {
      on_output(memory, trace.cycles.back());
    }
  }
  return trace;
}

nlohmann::json trace_to_json(const DecisionTrace& trace) {
  using nlohmann::json;
  json cycles = json::array();
  for (const auto& record : trace.cycles) {
    json proposals = json::array();
    for (const auto& p : record.proposals) {
      json bindings = json::object();
      for (const auto& [name, value] : p.bindings) {
        bindings[name] = to_text(value);
      }
      proposals.push_back({{"rule", p.rule_id},
                           {"priority", p.priority},
                           {"tie_key", p.tie_key},
                           {"bindings", bindings}});
    }
    json firings = json::array();
    for (const auto& f : record.firings) {
      json edits = json::array();
      for (const auto& e : f.edits) {
        edits.push_back({{"op", e.op == AppliedEdit::Op::add ? "add" : "remove"},
                         {"element", raw(e.element)},
                         {"parent", raw(e.parent)},
                         {"attribute", e.attribute},
                         {"value", e.value}});
      }
      json emitted = json::array();
      for (const auto& c : f.emitted) {
        json args = json::array();
        for (const auto& a : c.args) {
          args.push_back(to_text(a));
        }
        emitted.push_back({{"kind", c.kind}, {"args", args}, {"queue_seq", c.queue_seq}});
      }
      firings.push_back({{"rule", f.rule_id},
                         {"operator", f.is_operator},
                         {"facts", f.facts},
                         {"edits", edits},
                         {"emitted", emitted}});
    }
    cycles.push_back({{"cycle", record.cycle}, {"proposals", proposals}, {"firings", firings}});
  }
  return {{"quiescent", trace.quiescent},
          {"truncated", trace.truncated()},
          {"cycles_attempted", trace.cycles_attempted},
          {"cycles", cycles}};
}

std::string serialize_trace(const DecisionTrace& trace) { return trace_to_json(trace).dump(); }

}  // namespace ccu
