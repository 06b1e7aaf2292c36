// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#include "ccu/error.hpp"

namespace ccu {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownParent: return "UnknownParent";
    case ErrorCode::DanglingLink: return "DanglingLink";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::CannotRemoveRoot: return "CannotRemoveRoot";
    case ErrorCode::MalformedPattern: return "MalformedPattern";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateRuleId: return "DuplicateRuleId";
    case ErrorCode::UnboundActionVariable: return "UnboundActionVariable";
    case ErrorCode::ActionFailed: return "ActionFailed";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::InvalidTree: return "InvalidTree";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::AlreadyAttached: return "AlreadyAttached";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::MalformedTriplet: return "MalformedTriplet";
    case ErrorCode::NoSuchObject: return "NoSuchObject";
    case ErrorCode::MaterialMismatch: return "MaterialMismatch";
    case ErrorCode::AmbiguousObject: return "AmbiguousObject";
    case ErrorCode::ProcessUnsupported: return "ProcessUnsupported";
    case ErrorCode::NoInstructions: return "NoInstructions";
    case ErrorCode::PlanningFailed: return "PlanningFailed";
    case ErrorCode::InvalidRegion: return "InvalidRegion";
    case ErrorCode::WrongStatus: return "WrongStatus";
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::RobotBusy: return "RobotBusy";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::InvalidCursor: return "InvalidCursor";
    case ErrorCode::BadRequest: return "BadRequest";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput:
    case ErrorCode::MissingField:
    case ErrorCode::MalformedTriplet:
    case ErrorCode::NoSuchObject:
    case ErrorCode::MaterialMismatch:
    case ErrorCode::AmbiguousObject:
    case ErrorCode::ProcessUnsupported:
    case ErrorCode::NoInstructions:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message, std::optional<int> line)
    : std::runtime_error(line ? "line " + std::to_string(*line) + ": " + message : message),
      code_(code),
      line_(line) {}

}  // namespace ccu
