// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ccu/planner.hpp"
#include "json.hpp"

namespace ccu {

enum class Phase { started, progress, finished, failed, waiting_operator };

std::string_view to_string(Phase phase);
std::optional<Phase> parse_phase(std::string_view text);

struct ExecutionEvent {
  std::int64_t timestamp_ms = 0;  // logical clock
  int seq = 0;
  Phase phase = Phase::started;
  std::string detail;
  double progress = 0.0;
};

nlohmann::json event_to_json(const ExecutionEvent& event);
ExecutionEvent event_from_json(const nlohmann::json& json);

/// Simulated robot. `fault_at_seq` is a test hook.
struct RobotState {
  std::string mounted_tool;
  bool busy = false;
  std::optional<int> current_seq;
  std::optional<int> fault_at_seq;
};

struct ExecutionLog {
  std::vector<ExecutionEvent> events;
  bool failed = false;
  std::optional<int> failed_seq;
  /// Set when the plan stopped at an operator check that was not released.
  bool awaiting_operator = false;
};

/// Newline-delimited JSON, one event per line.
std::string serialize_event_log(const ExecutionLog& log);

/// Monotonic logical clock in milliseconds.
class LogicalClock {
 public:
  std::int64_t now() const noexcept { return now_ms_; }
  void advance(std::int64_t ms) noexcept { now_ms_ += ms; }

 private:
  std::int64_t now_ms_ = 0;
};

/// Simulated duration of an execute_step. Sanding and polishing scale with the
/// declared area and with coarseness (lower grit takes longer); screwing scales
/// with torque; anything else takes a flat time. The result is multiplied by
/// `time_compression`, so 0 means instant.
std::int64_t simulate_step_duration(const nlohmann::json& parameters, std::string_view process,
                                    double time_compression);

struct ExecutionOptions {
  double time_compression = 0.0;
  /// Also sleep for the simulated durations (service mode).
  bool real_time = false;
};

using EventSink = std::function<void(const ExecutionEvent&)>;

/// Blocks until the operator has answered an operator_check. Returning false
/// leaves the check unanswered and stops execution there.
using OperatorGate = std::function<bool(const PlannedCommand&)>;

/// Runs the plan strictly in seq order. An operator_check emits
/// waiting_operator and then waits on `gate`; without a gate the run stops
/// there with `awaiting_operator` set. An injected fault emits `failed` and
/// halts the plan. Throws RobotBusy if the robot is already executing.
ExecutionLog execute_plan(const CommandPlan& plan, RobotState& robot, const EventSink& sink,
                          const OperatorGate& gate, LogicalClock& clock,
                          const ExecutionOptions& options = {});

}  // namespace ccu
