// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ccu/working_memory.hpp"

namespace ccu {

using Scalar = std::variant<std::string, std::int64_t, double, bool>;

enum class ComponentKind { assembly, part };

std::string_view to_string(ComponentKind kind);

struct StepTemplate {
  int index = 0;  // 1-based, contiguous within a component
  std::string process;
  std::map<std::string, Scalar> parameters;
  std::optional<std::string> region;
  std::string description;

  friend bool operator==(const StepTemplate&, const StepTemplate&) = default;
};

struct ComponentTemplate {
  std::string name;
  ComponentKind kind = ComponentKind::part;
  std::vector<ComponentTemplate> children;  // only for assemblies
  std::vector<StepTemplate> steps;

  friend bool operator==(const ComponentTemplate&, const ComponentTemplate&) = default;
};

struct BuildStructureTemplate {
  ComponentTemplate root;

  friend bool operator==(const BuildStructureTemplate&, const BuildStructureTemplate&) = default;
};

struct InstructionKey {
  std::string object;
  std::string material;
  std::string process;

  friend auto operator<=>(const InstructionKey&, const InstructionKey&) = default;
};

struct InstructionEntry {
  InstructionKey key;
  BuildStructureTemplate structure;

  friend bool operator==(const InstructionEntry&, const InstructionEntry&) = default;
};

/// Offline build instructions keyed by (object, material, process). Immutable
/// once parsed.
class BuildInstructionSet {
 public:
  BuildInstructionSet() = default;
  BuildInstructionSet(std::string version, std::vector<InstructionEntry> entries,
                      std::string source_path = {});

  const std::string& version() const noexcept { return version_; }
  const std::string& source_path() const noexcept { return source_path_; }
  const std::vector<InstructionEntry>& entries() const noexcept { return entries_; }

  /// Case-insensitive, whitespace-normalized lookup. Throws NotFound.
  const BuildStructureTemplate& lookup(std::string_view object, std::string_view material,
                                       std::string_view process) const;
  const BuildStructureTemplate* find(std::string_view object, std::string_view material,
                                     std::string_view process) const;

  friend bool operator==(const BuildInstructionSet& a, const BuildInstructionSet& b) {
    return a.version_ == b.version_ && a.entries_ == b.entries_;
  }

 private:
  std::string version_;
  std::string source_path_;
  std::vector<InstructionEntry> entries_;
  std::map<InstructionKey, std::size_t> index_;
};

/// Strict JSON parser. Unknown fields are rejected. Throws ParseError,
/// DuplicateKey or InvalidTree.
BuildInstructionSet parse_instructions(std::string_view document, std::string source_path = {});
BuildInstructionSet load_instructions_file(const std::string& path);

/// Canonical JSON form; parse(serialize(s)) == s.
std::string serialize_instructions(const BuildInstructionSet& set);

/// A step together with the path of the component that owns it.
struct StepRef {
  std::vector<std::string> component_path;
  const StepTemplate* step = nullptr;
};

/// Steps in execution order: post-order over components (children before
/// their parent, siblings in document order), then step index.
std::vector<StepRef> execution_order(const BuildStructureTemplate& structure);

/// Attaches a BuildStructure subtree under `object`:
///
///   object.build-structure -> component -> production-process -> step ...
///
/// plus navigation links: build-structure.first-step / final-step, step.next
/// (execution order), and for every region of the object a finishing-step link
/// to the last step that covers it (region-scoped to it or unscoped), tagged
/// on the step with `finishes <region>`.
///
/// Throws AlreadyAttached if the object already has a build structure.
NodeId instantiate(WorkingMemory& memory, NodeId object, const BuildStructureTemplate& structure);

/// Reads a BuildStructure subtree back into a template (ignores navigation links).
BuildStructureTemplate read_build_structure(const WorkingMemory& memory, NodeId build_structure);

/// Lowercase, trimmed, internal whitespace collapsed to one space.
std::string normalize_label(std::string_view text);

}  // namespace ccu
