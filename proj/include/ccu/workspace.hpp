// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ccu/working_memory.hpp"
#include "json.hpp"

namespace ccu {

struct ToolSpec {
  std::string name;
  std::vector<std::string> processes;
  bool mounted = false;

  bool offers(std::string_view process) const;
  friend bool operator==(const ToolSpec&, const ToolSpec&) = default;
};

struct ObjectSpec {
  std::string name;
  std::string material;
  std::vector<std::string> regions;

  friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

/// The situation a scenario file declares. Stands in for situation detection.
struct Workspace {
  std::string name;
  std::vector<ToolSpec> tools;
  std::vector<ObjectSpec> objects;

  const ToolSpec* mounted_tool() const;
  const ToolSpec* tool(std::string_view name) const;
  friend bool operator==(const Workspace&, const Workspace&) = default;
};

/// Parses a scenario document (strict; labels are normalized). Throws
/// InvalidScenario on schema errors or violated workspace invariants.
Workspace parse_scenario(std::string_view document);
Workspace load_scenario_file(const std::string& path);
nlohmann::json scenario_to_json(const Workspace& workspace);

/// Handles into the memory layout built from a workspace.
struct MemoryLayout {
  NodeId io{};
  NodeId input{};
  NodeId output{};
  NodeId workspace{};
};

/// Builds the initial working memory:
///
///   state.io.{input, output}
///   state.workspace{name, tool{name, process*, mounted}, object{name, material, region*}}
WorkingMemory build_memory(const Workspace& workspace, MemoryLayout* layout = nullptr);

NodeId workspace_node(const WorkingMemory& memory);
std::optional<NodeId> find_object(const WorkingMemory& memory, std::string_view name);
std::optional<NodeId> find_tool(const WorkingMemory& memory, std::string_view name);
std::optional<std::string> mounted_tool_name(const WorkingMemory& memory);

/// Marks `tool` as the only mounted end effector.
void set_mounted_tool(WorkingMemory& memory, std::string_view tool);

/// Workspace-level invariants on a memory: unique tool/object names, at most
/// one mounted tool per workspace, non-empty process sets.
std::vector<std::string> validate_workspace_memory(const WorkingMemory& memory);

}  // namespace ccu
