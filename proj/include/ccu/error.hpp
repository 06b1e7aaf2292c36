// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ccu {

/// Machine-readable error classes. The string form of each code is part of the
/// HTTP and CLI contracts and must not change.
enum class ErrorCode {
  // working memory
  UnknownParent,
  DanglingLink,
  UnknownId,
  CannotRemoveRoot,
  MalformedPattern,
  // rules / engine
  ParseError,
  DuplicateRuleId,
  UnboundActionVariable,
  ActionFailed,
  // instructions
  DuplicateKey,
  InvalidTree,
  NotFound,
  AlreadyAttached,
  // scenario
  InvalidScenario,
  // triplets and validation
  EmptyInput,
  MissingField,
  MalformedTriplet,
  NoSuchObject,
  MaterialMismatch,
  AmbiguousObject,
  ProcessUnsupported,
  NoInstructions,
  // planning and lifecycle
  PlanningFailed,
  InvalidRegion,
  WrongStatus,
  IllegalTransition,
  // execution
  RobotBusy,
  // service
  UnknownTask,
  InvalidCursor,
  BadRequest,
};

std::string_view to_string(ErrorCode code);

/// True for codes that mean "the operator's triplet cannot be accepted".
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::optional<int> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::string_view code_name() const { return to_string(code_); }
  /// 1-based source line for document parse errors.
  std::optional<int> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::optional<int> line_;
};

}  // namespace ccu
