// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ccu/engine.hpp"
#include "ccu/instructions.hpp"
#include "ccu/task.hpp"
#include "ccu/workspace.hpp"
#include "json.hpp"

namespace ccu {

enum class CommandKind { check_end_effector, change_end_effector, execute_step, operator_check };
enum class CommandOrigin { precondition, step, postcondition };

std::string_view to_string(CommandKind kind);
std::string_view to_string(CommandOrigin origin);
std::optional<CommandKind> parse_command_kind(std::string_view text);
CommandOrigin origin_of(CommandKind kind);

struct Provenance {
  std::string rule;
  int cycle = 0;
};

struct PlannedCommand {
  int seq = 0;
  CommandKind kind = CommandKind::execute_step;
  CommandOrigin origin = CommandOrigin::step;
  nlohmann::json payload;
  Provenance provenance;
};

struct CommandPlan {
  TaskTriplet task;
  NodeId task_node{};
  bool rework = false;
  std::vector<PlannedCommand> commands;
  DecisionTrace trace;
};

/// `[{seq, kind, origin, payload, provenance{rule, cycle}}, ...]`
nlohmann::json plan_to_json(const CommandPlan& plan);
std::string serialize_plan(const CommandPlan& plan);

/// Empty when the plan satisfies the ordering, kind/origin and seq invariants
/// and every provenance points at a trace cycle that fired that rule.
std::vector<std::string> check_plan(const CommandPlan& plan);

/// A triplet that is known to be executable in a workspace.
struct ValidatedTask {
  TaskTriplet triplet;
  const ObjectSpec* object = nullptr;
  std::vector<const ToolSpec*> capable_tools;
  const BuildStructureTemplate* structure = nullptr;
};

/// Succeeds iff the object exists with that material, some tool offers the
/// process and build instructions exist for the triplet.
ValidatedTask validate_triplet(const TaskTriplet& triplet, const Workspace& workspace,
                               const BuildInstructionSet& instructions);

/// Named precondition check run before decomposition. Returns a reason when
/// the precondition is not met.
using PreconditionHook =
    std::function<std::optional<std::string>(const WorkingMemory&, const ValidatedTask&)>;

struct NamedPrecondition {
  std::string name;
  PreconditionHook check;
  bool enabled = false;
};

/// Restricts processes that need dust extraction (sand, polish) to workspaces
/// carrying `excavation true`. Disabled by default.
NamedPrecondition excavation_precondition();

struct PlannerOptions {
  int max_cycles = kDefaultMaxCycles;
  std::vector<NamedPrecondition> preconditions = {excavation_precondition()};
};

/// Allocates the task to its object and lets the ruleset decompose it. The
/// emitted output commands become the plan; `instantiate_build_structure`
/// requests are serviced between cycles.
///
/// Throws PlanningFailed when the engine does not reach quiescence, an action
/// fails, or the rules leave the task anywhere but `planned`.
CommandPlan decompose(const ValidatedTask& task, WorkingMemory& memory, const Ruleset& ruleset,
                      const PlannerOptions& options = {});

/// Finds the task node currently allocated to `object`.
std::optional<NodeId> find_task(const WorkingMemory& memory, std::string_view object);

/// Rework for rejected regions: the finishing step covering each region,
/// restricted to it, then one operator check. Requires awaiting_confirmation;
/// leaves the task reworking. Throws WrongStatus or InvalidRegion.
CommandPlan plan_rework(WorkingMemory& memory, NodeId task, const std::vector<std::string>& regions,
                        const Ruleset& ruleset, const PlannerOptions& options = {});

struct Verdict {
  bool accepted = true;
  std::vector<std::string> regions;

  static Verdict accept() { return {true, {}}; }
  static Verdict reject(std::vector<std::string> regions) { return {false, std::move(regions)}; }
};

struct ConfirmOutcome {
  TaskStatus status = TaskStatus::done;
  std::optional<CommandPlan> rework;
};

/// accepted -> done; rejected -> rework plan, status reworking.
ConfirmOutcome confirm_postcondition(WorkingMemory& memory, NodeId task, const Verdict& verdict,
                                     const Ruleset& ruleset, const PlannerOptions& options = {});

/// Explanation entries for a plan: producing rule, cycle and matched facts.
nlohmann::json explain_plan(const CommandPlan& plan);

}  // namespace ccu
