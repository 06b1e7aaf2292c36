// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ccu/rules.hpp"
#include "json.hpp"

namespace ccu {

inline constexpr int kDefaultMaxCycles = 10'000;

struct Proposal {
  std::string rule_id;
  int priority = 0;
  Bindings bindings;
  std::string tie_key;
};

struct AppliedEdit {
  enum class Op { add, remove };
  Op op = Op::add;
  NodeId element{};
  NodeId parent{};
  std::string attribute;
  std::string value;
};

/// A command placed on the io output queue by an `emit` action.
struct EmittedCommand {
  std::string kind;
  std::vector<Datum> args;
  NodeId entry{};
  std::int64_t queue_seq = 0;
};

struct Firing {
  std::string rule_id;
  bool is_operator = true;
  Bindings bindings;
  /// Matched memory facts as sentences, captured before the actions ran.
  std::vector<std::string> facts;
  std::vector<AppliedEdit> edits;
  std::vector<EmittedCommand> emitted;
};

struct CycleRecord {
  int cycle = 0;
  /// Operator proposals in selection order; the first one was applied.
  std::vector<Proposal> proposals;
  /// Elaborations first, then the selected operator (if any).
  std::vector<Firing> firings;

  const Firing* selected() const;
};

struct DecisionTrace {
  /// Only cycles that fired are recorded; numbering starts at 1.
  std::vector<CycleRecord> cycles;
  int cycles_attempted = 0;
  bool quiescent = false;

  bool truncated() const { return !quiescent; }
  std::size_t firing_count() const;
};

struct CycleOutcome {
  bool fired = false;
};

/// Called after every fired cycle; this is where the environment services the
/// output queue and may edit memory before the next cycle.
using OutputHandler = std::function<void(WorkingMemory&, const CycleRecord&)>;

/// One propose/select/apply cycle. Selection takes the highest priority, then
/// the smallest tie key, then the smallest rule id. Actions apply atomically;
/// on failure memory is rolled back and ActionFailed is thrown.
CycleOutcome run_cycle(WorkingMemory& memory, const Ruleset& ruleset, DecisionTrace& trace);

/// Runs cycles until nothing fires or `max_cycles` cycles have been attempted.
DecisionTrace run_to_quiescence(WorkingMemory& memory, const Ruleset& ruleset,
                                int max_cycles = kDefaultMaxCycles,
                                const OutputHandler& on_output = {});

/// Renders a memory node for humans: `tool "sander"`, `step 3`, `task sand/mineral cast/basin`.
std::string describe_node(const WorkingMemory& memory, NodeId id);

nlohmann::json trace_to_json(const DecisionTrace& trace);
std::string serialize_trace(const DecisionTrace& trace);

}  // namespace ccu
