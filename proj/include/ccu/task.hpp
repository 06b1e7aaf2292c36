// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "ccu/working_memory.hpp"

namespace ccu {

/// The operator's abstract command. All fields are normalized labels.
struct TaskTriplet {
  std::string process;
  std::string material;
  std::string object;

  /// `process - material - object`
  std::string to_string() const;
  friend auto operator<=>(const TaskTriplet&, const TaskTriplet&) = default;
};

/// Accepts `process - material - object` or `process, material, object`.
/// Commas take precedence, so hyphenated labels need the comma form.
/// Throws EmptyInput, MissingField (naming the field) or MalformedTriplet.
TaskTriplet parse_triplet(std::string_view text);

/// Labeled form, order-insensitive: keys `process`, `material`, `object`.
TaskTriplet parse_triplet(const std::map<std::string, std::string>& fields);

enum class TaskStatus {
  submitted,
  matched,
  planned,
  executing,
  awaiting_confirmation,
  reworking,
  done,
  failed,
};

std::string_view to_string(TaskStatus status);
std::optional<TaskStatus> parse_status(std::string_view text);
bool is_terminal(TaskStatus status);

/// The declared lifecycle edges:
///   submitted -> matched -> planned -> executing -> awaiting_confirmation -> done
///   awaiting_confirmation -> reworking -> awaiting_confirmation
///   any non-terminal -> failed
bool is_allowed_transition(TaskStatus from, TaskStatus to);

/// Creates `object.task{process, material, object, status=submitted}`.
NodeId allocate_task(WorkingMemory& memory, NodeId object, const TaskTriplet& triplet);

TaskStatus task_status(const WorkingMemory& memory, NodeId task);
TaskTriplet task_triplet(const WorkingMemory& memory, NodeId task);

/// Replaces the status element. Throws IllegalTransition for undeclared edges.
void set_task_status(WorkingMemory& memory, NodeId task, TaskStatus to);

}  // namespace ccu
