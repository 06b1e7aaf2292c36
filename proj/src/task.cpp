// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#include "ccu/task.hpp"

#include <algorithm>
#include <array>
#include <vector>

#include "ccu/error.hpp"
#include "ccu/instructions.hpp"

namespace ccu {

namespace {

constexpr std::array<std::string_view, 3> kFields = {"process", "material", "object"};

TaskTriplet from_parts(const std::array<std::string, 3>& parts) {
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].empty()) {
      throw Error(ErrorCode::MissingField, "missing field '" + std::string(kFields[i]) + "'");
    }
  }
  return {parts[0], parts[1], parts[2]};
}

}  // namespace

std::string TaskTriplet::to_string() const { return process + " - " + material + " - " + object; }

TaskTriplet parse_triplet(std::string_view text) {
  if (normalize_label(text).empty()) {
    throw Error(ErrorCode::EmptyInput, "triplet is empty");
  }
  const char separator = text.find(',') != std::string_view::npos ? ',' : '-';
  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (true) {
    std::size_t end = text.find(separator, start);
    pieces.push_back(normalize_label(text.substr(start, end == std::string_view::npos ? end : end - start)));
    if (end == std::string_view::npos) {
      break;
    }
    start = end + 1;
  }
  if (pieces.size() > 3) {
    throw Error(ErrorCode::MalformedTriplet,
                "expected 'process - material - object', got " + std::to_string(pieces.size()) + " fields");
  }
  std::array<std::string, 3> parts;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    parts[i] = pieces[i];
  }
  return from_parts(parts);
}

TaskTriplet parse_triplet(const std::map<std::string, std::string>& fields) {
  if (fields.empty()) {
    throw Error(ErrorCode::EmptyInput, "triplet is empty");
  }
  std::array<std::string, 3> parts;
  for (const auto& [key, value] : fields) {
    const std::string name = normalize_label(key);
    auto it = std::find(kFields.begin(), kFields.end(), name);
    if (it == kFields.end()) {
      throw Error(ErrorCode::MalformedTriplet, "unknown triplet field '" + key + "'");
    }
    parts[static_cast<std::size_t>(it - kFields.begin())] = normalize_label(value);
  }
  return from_parts(parts);
}

std::string_view to_string(TaskStatus status) {
  switch (status) {
    case TaskStatus::submitted: return "submitted";
    case TaskStatus::matched: return "matched";
    case TaskStatus::planned: return "planned";
    case TaskStatus::executing: return "executing";
    case TaskStatus::awaiting_confirmation: return "awaiting_confirmation";
    case TaskStatus::reworking: return "reworking";
    case TaskStatus::done: return "done";
    case TaskStatus::failed: return "failed";
  }
  return "?";
}

std::optional<TaskStatus> parse_status(std::string_view text) {
  for (auto status : {TaskStatus::submitted, TaskStatus::matched, TaskStatus::planned,
                      TaskStatus::executing, TaskStatus::awaiting_confirmation, TaskStatus::reworking,
                      TaskStatus::done, TaskStatus::failed}) {
    if (to_string(status) == text) {
      return status;
    }
  }
  return std::nullopt;
}

bool is_terminal(TaskStatus status) {
  return status == TaskStatus::done || status == TaskStatus::failed;
}

bool is_allowed_transition(TaskStatus from, TaskStatus to) {
  using S = TaskStatus;
  if (to == S::failed) {
    return !is_terminal(from);
  }
  switch (from) {
    case S::submitted: return to == S::matched;
    case S::matched: return to == S::planned;
    case S::planned: return to == S::executing;
    case S::executing: return to == S::awaiting_confirmation;
    case S::awaiting_confirmation: return to == S::done || to == S::reworking;
    case S::reworking: return to == S::awaiting_confirmation;
    case S::done:
    case S::failed: return false;
  }
  return false;
}

NodeId allocate_task(WorkingMemory& memory, NodeId object, const TaskTriplet& triplet) {
  const NodeId task = memory.add_node(object, "task");
  memory.add_wme(task, "process", triplet.process);
  memory.add_wme(task, "material", triplet.material);
  memory.add_wme(task, "object", triplet.object);
  memory.add_wme(task, "status", std::string(to_string(TaskStatus::submitted)));
  return task;
}

TaskStatus task_status(const WorkingMemory& memory, NodeId task) {
  auto text = memory.string_of(task, "status");
  if (!text) {
    throw Error(ErrorCode::UnknownId, "element is not a task");
  }
  auto status = parse_status(*text);
  if (!status) {
    throw Error(ErrorCode::IllegalTransition, "task has unknown status '" + *text + "'");
  }
  return *status;
}

TaskTriplet task_triplet(const WorkingMemory& memory, NodeId task) {
  return {memory.string_of(task, "process").value_or(""), memory.string_of(task, "material").value_or(""),
          memory.string_of(task, "object").value_or("")};
}

void set_task_status(WorkingMemory& memory, NodeId task, TaskStatus to) {
  const TaskStatus from = task_status(memory, task);
  if (!is_allowed_transition(from, to)) {
    throw Error(ErrorCode::IllegalTransition, "task cannot move from " + std::string(to_string(from)) +
                                                  " to " + std::string(to_string(to)));
  }
  for (const Wme* wme : memory.children_with(task, "status")) {
    memory.remove_wme(wme->id);
  }
  memory.add_wme(task, "status", std::string(to_string(to)));
}

}  // namespace ccu
