// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#include "ccu/execution.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "ccu/error.hpp"

namespace ccu {

using nlohmann::json;

namespace {

constexpr std::int64_t kToolCheckMs = 2'000;
constexpr std::int64_t kToolChangeMs = 15'000;
constexpr std::int64_t kOperatorPromptMs = 500;

double number_or(const json& parameters, const char* key, double fallback) {
  if (parameters.is_object()) {
    auto it = parameters.find(key);
    if (it != parameters.end() && it->is_number()) {
      return it->get<double>();
    }
  }
  return fallback;
}

std::int64_t compress(double ms, double factor) {
  if (factor <= 0.0) {
    return 0;
  }
  return static_cast<std::int64_t>(std::llround(ms * factor));
}

}  // namespace

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::started: return "started";
    case Phase::progress: return "progress";
    case Phase::finished: return "finished";
    case Phase::failed: return "failed";
    case Phase::waiting_operator: return "waiting_operator";
  }
  return "?";
}

std::optional<Phase> parse_phase(std::string_view text) {
  for (auto phase : {Phase::started, Phase::progress, Phase::finished, Phase::failed,
                     Phase::waiting_operator}) {
    if (to_string(phase) == text) {
      return phase;
    }
  }
  return std::nullopt;
}

json event_to_json(const ExecutionEvent& event) {
  return {{"timestamp", event.timestamp_ms},
          {"seq", event.seq},
          {"phase", std::string(to_string(event.phase))},
          {"detail", event.detail},
          {"progress", event.progress}};
}

ExecutionEvent event_from_json(const json& j) {
  ExecutionEvent event;
  event.timestamp_ms = j.at("timestamp").get<std::int64_t>();
  event.seq = j.at("seq").get<int>();
  event.phase = parse_phase(j.at("phase").get<std::string>()).value_or(Phase::started);
  event.detail = j.value("detail", std::string());
  event.progress = j.value("progress", 0.0);
  return event;
}

std::string serialize_event_log(const ExecutionLog& log) {
  std::string out;
  for (const auto& event : log.events) {
    out += event_to_json(event).dump();
    out += '\n';
  }
  return out;
}

std::int64_t simulate_step_duration(const json& parameters, std::string_view process,
                                    double time_compression) {
  double ms = 10'000.0;
  if (process == "sand" || process == "polish") {
    const double area = number_or(parameters, "area_m2", 1.0);
    const double grit = number_or(parameters, "grit", 400.0);
    // 60 s per square metre at grit 400; coarser grit removes more material.
    ms = 60'000.0 * area * (0.5 + 200.0 / std::max(grit, 1.0));
  } else if (process == "screw") {
    ms = 3'000.0 + 500.0 * number_or(parameters, "torque_nm", 4.0);
  }
  return compress(ms, time_compression);
}

ExecutionLog execute_plan(const CommandPlan& plan, RobotState& robot, const EventSink& sink,
                          const OperatorGate& gate, LogicalClock& clock,
                          const ExecutionOptions& options) {
  if (robot.busy) {
    throw Error(ErrorCode::RobotBusy, "robot is executing command " +
                                          std::to_string(robot.current_seq.value_or(0)));
  }
  ExecutionLog log;
  auto emit = [&](int seq, Phase phase, std::string detail, double progress) {
    ExecutionEvent event{clock.now(), seq, phase, std::move(detail), progress};
    log.events.push_back(event);
    if (sink) {
      sink(event);
    }
  };
  auto spend = [&](std::int64_t ms) {
    if (options.real_time && ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }
    clock.advance(ms);
  };

  robot.busy = true;
  for (const auto& command : plan.commands) {
    robot.current_seq = command.seq;
    emit(command.seq, Phase::started, std::string(to_string(command.kind)), 0.0);

    if (robot.fault_at_seq && *robot.fault_at_seq == command.seq) {
      emit(command.seq, Phase::failed, "injected fault", 0.0);
      log.failed = true;
      log.failed_seq = command.seq;
      break;
    }

    switch (command.kind) {
      case CommandKind::check_end_effector: {
        spend(compress(kToolCheckMs, options.time_compression));
        const std::string required = command.payload.value("tool", std::string());
        emit(command.seq, Phase::finished,
             robot.mounted_tool == required ? "mounted: " + required
                                            : "mounted: " + robot.mounted_tool + ", required: " + required,
             1.0);
        break;
      }
      case CommandKind::change_end_effector: {
        const std::string tool = command.payload.value("tool", std::string());
        const std::int64_t total = compress(kToolChangeMs, options.time_compression);
        spend(total / 2);
        emit(command.seq, Phase::progress, "detached " + robot.mounted_tool, 0.5);
        spend(total - total / 2);
        robot.mounted_tool = tool;
        emit(command.seq, Phase::finished, "mounted " + tool, 1.0);
        break;
      }
      case CommandKind::execute_step: {
        const std::string process = command.payload.value("process", std::string());
        const std::int64_t total = simulate_step_duration(command.payload.value("parameters", json::object()),
                                                          process, options.time_compression);
        std::string what = command.payload.value("path", std::string()) + " step " +
                           command.payload.value("index", json()).dump();
        if (command.payload.contains("region") && command.payload["region"].is_string()) {
          what += " (region " + command.payload["region"].get<std::string>() + ")";
        }
        spend(total / 2);
        emit(command.seq, Phase::progress, what, 0.5);
        spend(total - total / 2);
        emit(command.seq, Phase::finished, what, 1.0);
        break;
      }
      case CommandKind::operator_check: {
        spend(compress(kOperatorPromptMs, options.time_compression));
        emit(command.seq, Phase::waiting_operator, command.payload.value("prompt", std::string()), 0.0);
        if (!gate || !gate(command)) {
          log.awaiting_operator = true;
          robot.busy = false;
          robot.current_seq.reset();
          return log;
        }
        emit(command.seq, Phase::finished, "operator answered", 1.0);
        break;
      }
    }
  }
  robot.busy = false;
  robot.current_seq.reset();
  return log;
}

}  // namespace ccu
