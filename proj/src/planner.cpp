// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#include "ccu/planner.hpp"

#include <algorithm>
#include <set>

#include "ccu/error.hpp"

namespace ccu {

using nlohmann::json;

namespace {

constexpr std::string_view kInstantiate = "instantiate_build_structure";

json datum_json(const Datum& datum) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NodeId>) {
          return "#" + std::to_string(raw(v));
        } else {
          return v;
        }
      },
      datum);
}

std::optional<NodeId> arg_node(const EmittedCommand& command, std::size_t index) {
  if (index >= command.args.size()) {
    return std::nullopt;
  }
  if (const auto* id = std::get_if<NodeId>(&command.args[index])) {
    return *id;
  }
  return std::nullopt;
}

std::optional<std::string> arg_string(const EmittedCommand& command, std::size_t index) {
  if (index >= command.args.size()) {
    return std::nullopt;
  }
  if (const auto* s = std::get_if<std::string>(&command.args[index])) {
    return *s;
  }
  return std::nullopt;
}

NodeId object_of_task(const WorkingMemory& memory, NodeId task) {
  return *memory.get(task).parent;
}

json tool_payload(const WorkingMemory& memory, const EmittedCommand& command, bool change) {
  auto tool = arg_node(command, 0);
  if (!tool) {
    throw Error(ErrorCode::PlanningFailed, command.kind + " needs a tool argument");
  }
  json payload = {{"tool", memory.string_of(*tool, "name").value_or("")}};
  if (change) {
    auto mounted = mounted_tool_name(memory);
    payload["replaces"] = mounted ? json(*mounted) : json(nullptr);
  }
  return payload;
}

json step_payload(const WorkingMemory& memory, const EmittedCommand& command) {
  auto step = arg_node(command, 0);
  if (!step || !memory.contains(*step)) {
    throw Error(ErrorCode::PlanningFailed, "execute_step needs a step argument");
  }
  json parameters = json::object();
  for (NodeId field : memory.children(*step)) {
    const Wme& wme = memory.get(field);
    if (wme.attribute.starts_with("param:")) {
      parameters[wme.attribute.substr(6)] = datum_json(wme.datum());
    }
  }
  std::vector<std::string> path;
  std::optional<NodeId> cursor = memory.get(*step).parent;
  while (cursor && memory.contains(*cursor)) {
    const Wme& node = memory.get(*cursor);
    if (node.attribute == "component") {
      path.push_back(memory.string_of(*cursor, "name").value_or(""));
    } else if (node.attribute == "build-structure") {
      break;
    }
    cursor = node.parent;
  }
  std::reverse(path.begin(), path.end());
  std::string joined;
  for (const auto& part : path) {
    joined += (joined.empty() ? "" : "/") + part;
  }

  std::optional<std::string> region = arg_string(command, 1);
  if (!region) {
    region = memory.string_of(*step, "region");
  }
  auto index = memory.value_of(*step, "index");
  return {{"component", path.empty() ? "" : path.back()},
          {"path", joined},
          {"index", index ? datum_json(*index) : json(nullptr)},
          {"process", memory.string_of(*step, "process").value_or("")},
          {"parameters", parameters},
          {"region", region ? json(*region) : json(nullptr)},
          {"description", memory.string_of(*step, "description").value_or("")}};
}

json check_payload(const WorkingMemory& memory, const EmittedCommand& command, bool rework,
                   const std::vector<std::string>& rework_regions) {
  auto task = arg_node(command, 0);
  if (!task) {
    throw Error(ErrorCode::PlanningFailed, "operator_check needs a task argument");
  }
  const TaskTriplet triplet = task_triplet(memory, *task);
  std::vector<std::string> regions;
  for (const Datum& d : memory.values_of(object_of_task(memory, *task), "region")) {
    if (const auto* s = std::get_if<std::string>(&d)) {
      regions.push_back(*s);
    }
  }
  json payload = {{"object", triplet.object}, {"regions", regions}};
  if (rework) {
    std::string listed;
    for (const auto& r : rework_regions) {
      listed += (listed.empty() ? "" : ", ") + r;
    }
    payload["prompt"] = "Check the reworked regions (" + listed + ") of the " + triplet.object + ".";
    payload["rework_regions"] = rework_regions;
  } else {
    payload["prompt"] = "Check the result of '" + triplet.to_string() + "'.";
  }
  return payload;
}

void collect_commands(const WorkingMemory& memory, CommandPlan& plan,
                      const std::vector<std::string>& rework_regions) {
  for (const auto& record : plan.trace.cycles) {
    for (const auto& firing : record.firings) {
      for (const auto& emitted : firing.emitted) {
        auto kind = parse_command_kind(emitted.kind);
        if (!kind) {
          continue;
        }
        PlannedCommand command;
        command.seq = static_cast<int>(plan.commands.size()) + 1;
        command.kind = *kind;
        command.origin = origin_of(*kind);
        command.provenance = {firing.rule_id, record.cycle};
        switch (*kind) {
          case CommandKind::check_end_effector:
            command.payload = tool_payload(memory, emitted, false);
            break;
          case CommandKind::change_end_effector:
            command.payload = tool_payload(memory, emitted, true);
            break;
          case CommandKind::execute_step:
            command.payload = step_payload(memory, emitted);
            break;
          case CommandKind::operator_check:
            command.payload = check_payload(memory, emitted, plan.rework, rework_regions);
            break;
        }
        plan.commands.push_back(std::move(command));
      }
    }
  }
}

DecisionTrace run_rules(WorkingMemory& memory, const Ruleset& ruleset, int max_cycles,
                        const OutputHandler& handler) {
  DecisionTrace trace;
  try {
    trace = run_to_quiescence(memory, ruleset, max_cycles, handler);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ActionFailed) {
      throw Error(ErrorCode::PlanningFailed, std::string("rule action failed: ") + e.what());
    }
    throw;
  }
  if (!trace.quiescent) {
    throw Error(ErrorCode::PlanningFailed,
                "rule engine did not reach quiescence within " + std::to_string(max_cycles) + " cycles");
  }
  return trace;
}

void require_valid(const CommandPlan& plan) {
  auto problems = check_plan(plan);
  if (!problems.empty()) {
    throw Error(ErrorCode::PlanningFailed, "rules produced an invalid plan: " + problems.front());
  }
}

}  // namespace

std::string_view to_string(CommandKind kind) {
  switch (kind) {
    case CommandKind::check_end_effector: return "check_end_effector";
    case CommandKind::change_end_effector: return "change_end_effector";
    case CommandKind::execute_step: return "execute_step";
    case CommandKind::operator_check: return "operator_check";
  }
  return "?";
}

std::string_view to_string(CommandOrigin origin) {
  switch (origin) {
    case CommandOrigin::precondition: return "precondition";
    case CommandOrigin::step: return "step";
    case CommandOrigin::postcondition: return "postcondition";
  }
  return "?";
}

std::optional<CommandKind> parse_command_kind(std::string_view text) {
  for (auto kind : {CommandKind::check_end_effector, CommandKind::change_end_effector,
                    CommandKind::execute_step, CommandKind::operator_check}) {
    if (to_string(kind) == text) {
      return kind;
    }
  }
  return std::nullopt;
}

CommandOrigin origin_of(CommandKind kind) {
  switch (kind) {
    case CommandKind::check_end_effector:
    case CommandKind::change_end_effector:
      return CommandOrigin::precondition;
    case CommandKind::execute_step:
      return CommandOrigin::step;
    case CommandKind::operator_check:
      return CommandOrigin::postcondition;
  }
  return CommandOrigin::step;
}

json plan_to_json(const CommandPlan& plan) {
  json commands = json::array();
  for (const auto& c : plan.commands) {
    commands.push_back({{"seq", c.seq},
                        {"kind", std::string(to_string(c.kind))},
                        {"origin", std::string(to_string(c.origin))},
                        {"payload", c.payload},
                        {"provenance", {{"rule", c.provenance.rule}, {"cycle", c.provenance.cycle}}}});
  }
  return commands;
}

std::string serialize_plan(const CommandPlan& plan) { return plan_to_json(plan).dump(); }

std::vector<std::string> check_plan(const CommandPlan& plan) {
  std::vector<std::string> problems;
  int last_origin = -1;
  for (std::size_t i = 0; i < plan.commands.size(); ++i) {
    const auto& c = plan.commands[i];
    const std::string at = "command " + std::to_string(i + 1);
    if (c.seq != static_cast<int>(i + 1)) {
      problems.push_back(at + " has seq " + std::to_string(c.seq));
    }
    if (c.origin != origin_of(c.kind)) {
      problems.push_back(at + " has origin inconsistent with its kind");
    }
    const int origin = static_cast<int>(c.origin);
    if (origin < last_origin) {
      problems.push_back(at + " (" + std::string(to_string(c.origin)) + ") is out of order");
    }
    last_origin = std::max(last_origin, origin);
    bool traced = false;
    for (const auto& record : plan.trace.cycles) {
      if (record.cycle != c.provenance.cycle) {
        continue;
      }
      for (const auto& firing : record.firings) {
        traced = traced || firing.rule_id == c.provenance.rule;
      }
    }
    if (!traced) {
      problems.push_back(at + " cites rule '" + c.provenance.rule + "' in cycle " +
                         std::to_string(c.provenance.cycle) + " which is not in the trace");
    }
  }
  return problems;
}

ValidatedTask validate_triplet(const TaskTriplet& triplet, const Workspace& workspace,
                               const BuildInstructionSet& instructions) {
  const std::string object = normalize_label(triplet.object);
  const std::string material = normalize_label(triplet.material);
  const std::string process = normalize_label(triplet.process);

  ValidatedTask task;
  task.triplet = {process, material, object};

  std::vector<const ObjectSpec*> named;
  for (const auto& o : workspace.objects) {
    if (o.name == object) {
      named.push_back(&o);
    }
  }
  if (named.empty()) {
    throw Error(ErrorCode::NoSuchObject, "no object '" + object + "' in workspace '" + workspace.name + "'");
  }
  std::vector<const ObjectSpec*> matching;
  for (const auto* o : named) {
    if (o->material == material) {
      matching.push_back(o);
    }
  }
  if (matching.empty()) {
    throw Error(ErrorCode::MaterialMismatch,
                "object '" + object + "' is made of " + named.front()->material + ", not " + material);
  }
  if (matching.size() > 1) {
    throw Error(ErrorCode::AmbiguousObject, "several objects match '" + object + "' (" + material + ")");
  }
  task.object = matching.front();

  for (const auto& tool : workspace.tools) {
    if (tool.offers(process)) {
      task.capable_tools.push_back(&tool);
    }
  }
  if (task.capable_tools.empty()) {
    throw Error(ErrorCode::ProcessUnsupported, "no tool in the workspace offers '" + process + "'");
  }

  task.structure = instructions.find(object, material, process);
  if (task.structure == nullptr) {
    throw Error(ErrorCode::NoInstructions,
                "no build instructions for '" + task.triplet.to_string() + "'");
  }
  return task;
}

NamedPrecondition excavation_precondition() {
  NamedPrecondition hook;
  hook.name = "excavation";
  hook.enabled = false;
  hook.check = [](const WorkingMemory& memory, const ValidatedTask& task) -> std::optional<std::string> {
    const auto& process = task.triplet.process;
    if (process != "sand" && process != "polish") {
      return std::nullopt;
    }
    if (memory.value_of(workspace_node(memory), "excavation") == Datum{true}) {
      return std::nullopt;
    }
    return "'" + process + "' requires an excavation system in the workspace";
  };
  return hook;
}

std::optional<NodeId> find_task(const WorkingMemory& memory, std::string_view object) {
  auto node = find_object(memory, object);
  if (!node) {
    return std::nullopt;
  }
  return memory.node_of(*node, "task");
}

CommandPlan decompose(const ValidatedTask& task, WorkingMemory& memory, const Ruleset& ruleset,
                      const PlannerOptions& options) {
  if (task.object == nullptr || task.structure == nullptr) {
    throw Error(ErrorCode::PlanningFailed, "task has not been validated");
  }
  for (const auto& precondition : options.preconditions) {
    if (!precondition.enabled) {
      continue;
    }
    if (auto reason = precondition.check(memory, task)) {
      throw Error(ErrorCode::PlanningFailed, "precondition '" + precondition.name + "' failed: " + *reason);
    }
  }

  auto object = find_object(memory, task.object->name);
  if (!object || memory.string_of(*object, "material") != task.object->material) {
    throw Error(ErrorCode::PlanningFailed, "object '" + task.object->name + "' is not in working memory");
  }
  if (auto previous = memory.node_of(*object, "task")) {
    if (!is_terminal(task_status(memory, *previous))) {
      throw Error(ErrorCode::PlanningFailed, "object '" + task.object->name + "' already has an active task");
    }
    memory.remove_wme(*previous);
  }
  for (const Wme* structure : memory.children_with(*object, "build-structure")) {
    memory.remove_wme(structure->id);
  }

  CommandPlan plan;
  plan.task = task.triplet;
  plan.task_node = allocate_task(memory, *object, task.triplet);

  const BuildStructureTemplate& structure = *task.structure;
  OutputHandler handler = [&](WorkingMemory& mem, const CycleRecord& record) {
    for (const auto& firing : record.firings) {
      for (const auto& emitted : firing.emitted) {
        if (emitted.kind != kInstantiate) {
          continue;
        }
        auto target = arg_node(emitted, 0);
        if (!target) {
          throw Error(ErrorCode::PlanningFailed, "instantiate request without an object");
        }
        instantiate(mem, *target, structure);
      }
    }
  };
  plan.trace = run_rules(memory, ruleset, options.max_cycles, handler);

  const TaskStatus status = task_status(memory, plan.task_node);
  if (status != TaskStatus::planned) {
    throw Error(ErrorCode::PlanningFailed,
                "rules left the task " + std::string(to_string(status)) + " instead of planned");
  }
  collect_commands(memory, plan, {});
  require_valid(plan);
  return plan;
}

CommandPlan plan_rework(WorkingMemory& memory, NodeId task, const std::vector<std::string>& regions,
                        const Ruleset& ruleset, const PlannerOptions& options) {
  const TaskStatus status = task_status(memory, task);
  if (status != TaskStatus::awaiting_confirmation) {
    throw Error(ErrorCode::WrongStatus,
                "rework needs a task awaiting confirmation, task is " + std::string(to_string(status)));
  }
  if (regions.empty()) {
    throw Error(ErrorCode::InvalidRegion, "rework needs at least one region");
  }
  const NodeId object = object_of_task(memory, task);
  std::set<std::string> known;
  for (const Datum& d : memory.values_of(object, "region")) {
    if (const auto* s = std::get_if<std::string>(&d)) {
      known.insert(*s);
    }
  }
  std::set<std::string> finishable;
  if (auto structure = memory.node_of(object, "build-structure")) {
    for (const Datum& step : memory.values_of(*structure, "finishing-step")) {
      for (const Datum& r : memory.values_of(std::get<NodeId>(step), "finishes")) {
        finishable.insert(std::get<std::string>(r));
      }
    }
  }
  std::set<std::string> requested;
  for (const auto& region : regions) {
    const std::string label = normalize_label(region);
    if (!known.contains(label)) {
      throw Error(ErrorCode::InvalidRegion, "object has no region '" + label + "'");
    }
    if (!finishable.contains(label)) {
      throw Error(ErrorCode::InvalidRegion, "no production step covers region '" + label + "'");
    }
    requested.insert(label);
  }

  set_task_status(memory, task, TaskStatus::reworking);
  for (const Wme* stale : memory.children_with(task, "rework")) {
    memory.remove_wme(stale->id);
  }
  std::int64_t round = 1;
  for (const Wme* r : memory.children_with(task, "rework-round")) {
    round = std::max(round, std::get<std::int64_t>(r->datum()) + 1);
    memory.remove_wme(r->id);
  }
  memory.add_wme(task, "rework-round", round);
  for (const auto& region : requested) {
    const NodeId request = memory.add_node(task, "rework");
    memory.add_wme(request, "region", region);
    memory.add_wme(task, "rework-open", Link{request});
  }

  CommandPlan plan;
  plan.task = task_triplet(memory, task);
  plan.task_node = task;
  plan.rework = true;
  plan.trace = run_rules(memory, ruleset, options.max_cycles, {});
  collect_commands(memory, plan, {requested.begin(), requested.end()});
  require_valid(plan);
  return plan;
}

ConfirmOutcome confirm_postcondition(WorkingMemory& memory, NodeId task, const Verdict& verdict,
                                     const Ruleset& ruleset, const PlannerOptions& options) {
  const TaskStatus status = task_status(memory, task);
  if (status != TaskStatus::awaiting_confirmation) {
    throw Error(ErrorCode::WrongStatus,
                "confirmation needs a task awaiting confirmation, task is " + std::string(to_string(status)));
  }
  ConfirmOutcome outcome;
  if (verdict.accepted) {
    set_task_status(memory, task, TaskStatus::done);
    outcome.status = TaskStatus::done;
    return outcome;
  }
  outcome.rework = plan_rework(memory, task, verdict.regions, ruleset, options);
  outcome.status = task_status(memory, task);
  return outcome;
}

json explain_plan(const CommandPlan& plan) {
  json entries = json::array();
  for (const auto& command : plan.commands) {
    std::vector<std::string> facts;
    for (const auto& record : plan.trace.cycles) {
      if (record.cycle != command.provenance.cycle) {
        continue;
      }
      for (const auto& firing : record.firings) {
        if (firing.rule_id == command.provenance.rule) {
          facts = firing.facts;
        }
      }
    }
    std::string subject;
    if (command.payload.contains("tool")) {
      subject = " " + command.payload["tool"].get<std::string>();
    } else if (command.kind == CommandKind::execute_step) {
      subject = " " + command.payload.value("path", std::string()) + " step " +
                command.payload["index"].dump();
    }
    entries.push_back({{"seq", command.seq},
                       {"kind", std::string(to_string(command.kind))},
                       {"origin", std::string(to_string(command.origin))},
                       {"rule", command.provenance.rule},
                       {"cycle", command.provenance.cycle},
                       {"facts", facts},
                       {"summary", std::string(to_string(command.kind)) + subject + ": rule '" +
                                       command.provenance.rule + "' fired in cycle " +
                                       std::to_string(command.provenance.cycle) + " because " +
                                       std::to_string(facts.size()) + " facts matched"}});
  }
  return entries;
}

}  // namespace ccu
