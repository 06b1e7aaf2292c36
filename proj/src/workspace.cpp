// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#include "ccu/workspace.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "ccu/error.hpp"
#include "ccu/instructions.hpp"

namespace ccu {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& reason) {
  throw Error(ErrorCode::InvalidScenario, reason);
}

void only_fields(const json& node, std::initializer_list<std::string_view> allowed, const std::string& path) {
  if (!node.is_object()) {
    invalid(path + ": expected an object");
  }
  for (const auto& [key, value] : node.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      invalid(path + ": unknown field '" + key + "'");
    }
  }
}

std::string label_field(const json& node, const char* field, const std::string& path) {
  auto it = node.find(field);
  if (it == node.end() || !it->is_string()) {
    invalid(path + ": '" + field + "' must be a string");
  }
  std::string label = normalize_label(it->get<std::string>());
  if (label.empty()) {
    invalid(path + ": '" + field + "' is empty");
  }
  return label;
}

std::vector<std::string> label_list(const json& node, const char* field, const std::string& path,
                                    bool required) {
  auto it = node.find(field);
  if (it == node.end()) {
    if (required) {
      invalid(path + ": missing '" + field + "'");
    }
    return {};
  }
  if (!it->is_array()) {
    invalid(path + ": '" + field + "' must be an array");
  }
  std::vector<std::string> out;
  for (const auto& item : *it) {
    if (!item.is_string() || normalize_label(item.get<std::string>()).empty()) {
      invalid(path + ": '" + field + "' entries must be non-empty strings");
    }
    std::string label = normalize_label(item.get<std::string>());
    if (std::find(out.begin(), out.end(), label) == out.end()) {
      out.push_back(std::move(label));
    }
  }
  return out;
}

}  // namespace

bool ToolSpec::offers(std::string_view process) const {
  return std::find(processes.begin(), processes.end(), process) != processes.end();
}

const ToolSpec* Workspace::mounted_tool() const {
  for (const auto& t : tools) {
    if (t.mounted) {
      return &t;
    }
  }
  return nullptr;
}

const ToolSpec* Workspace::tool(std::string_view tool_name) const {
  for (const auto& t : tools) {
    if (t.name == tool_name) {
      return &t;
    }
  }
  return nullptr;
}

Workspace parse_scenario(std::string_view document) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    invalid(std::string("scenario is not valid JSON: ") + e.what());
  }
  only_fields(root, {"workspace", "tools", "objects"}, "$");
  Workspace ws;
  ws.name = label_field(root, "workspace", "$");

  std::set<std::string> tool_names;
  int mounted = 0;
  if (auto it = root.find("tools"); it != root.end()) {
    if (!it->is_array()) {
      invalid("$.tools must be an array");
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string path = "$.tools[" + std::to_string(i) + "]";
      const json& node = (*it)[i];
      only_fields(node, {"name", "processes", "mounted"}, path);
      ToolSpec tool;
      tool.name = label_field(node, "name", path);
      tool.processes = label_list(node, "processes", path, true);
      if (tool.processes.empty()) {
        invalid(path + ": a tool must offer at least one process");
      }
      if (auto m = node.find("mounted"); m != node.end()) {
        if (!m->is_boolean()) {
          invalid(path + ": 'mounted' must be a boolean");
        }
        tool.mounted = m->get<bool>();
      }
      mounted += tool.mounted ? 1 : 0;
      if (!tool_names.insert(tool.name).second) {
        invalid(path + ": duplicate tool name '" + tool.name + "'");
      }
      ws.tools.push_back(std::move(tool));
    }
  }
  if (mounted > 1) {
    invalid("at most one tool may be mounted");
  }

  std::set<std::string> object_names;
  if (auto it = root.find("objects"); it != root.end()) {
    if (!it->is_array()) {
      invalid("$.objects must be an array");
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string path = "$.objects[" + std::to_string(i) + "]";
      const json& node = (*it)[i];
      only_fields(node, {"name", "material", "regions"}, path);
      ObjectSpec object;
      object.name = label_field(node, "name", path);
      object.material = label_field(node, "material", path);
      object.regions = label_list(node, "regions", path, false);
      if (!object_names.insert(object.name).second) {
        invalid(path + ": duplicate object name '" + object.name + "'");
      }
      ws.objects.push_back(std::move(object));
    }
  }
  return ws;
}

Workspace load_scenario_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    invalid("cannot open scenario '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_scenario(buffer.str());
}

json scenario_to_json(const Workspace& workspace) {
  json tools = json::array();
  for (const auto& t : workspace.tools) {
    tools.push_back({{"name", t.name}, {"processes", t.processes}, {"mounted", t.mounted}});
  }
  json objects = json::array();
  for (const auto& o : workspace.objects) {
    objects.push_back({{"name", o.name}, {"material", o.material}, {"regions", o.regions}});
  }
  return {{"workspace", workspace.name}, {"tools", tools}, {"objects", objects}};
}

WorkingMemory build_memory(const Workspace& workspace, MemoryLayout* layout) {
  WorkingMemory memory;
  MemoryLayout handles;
  handles.io = memory.add_node(memory.root(), "io");
  handles.input = memory.add_node(handles.io, "input");
  handles.output = memory.add_node(handles.io, "output");
  handles.workspace = memory.add_node(memory.root(), "workspace");
  memory.add_wme(handles.workspace, "name", workspace.name);
  for (const auto& tool : workspace.tools) {
    const NodeId t = memory.add_node(handles.workspace, "tool");
    memory.add_wme(t, "name", tool.name);
    for (const auto& process : tool.processes) {
      memory.add_wme(t, "process", process);
    }
    memory.add_wme(t, "mounted", tool.mounted);
  }
  for (const auto& object : workspace.objects) {
    const NodeId o = memory.add_node(handles.workspace, "object");
    memory.add_wme(o, "name", object.name);
    memory.add_wme(o, "material", object.material);
    for (const auto& region : object.regions) {
      memory.add_wme(o, "region", region);
    }
  }
  if (layout != nullptr) {
    *layout = handles;
  }
  return memory;
}

NodeId workspace_node(const WorkingMemory& memory) {
  auto ws = memory.node_of(memory.root(), "workspace");
  if (!ws) {
    throw Error(ErrorCode::InvalidScenario, "memory has no workspace");
  }
  return *ws;
}

namespace {

std::optional<NodeId> find_named(const WorkingMemory& memory, std::string_view attribute,
                                 std::string_view name) {
  const std::string wanted = normalize_label(name);
  for (const Wme* wme : memory.children_with(workspace_node(memory), attribute)) {
    if (memory.string_of(wme->id, "name") == wanted) {
      return wme->id;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<NodeId> find_object(const WorkingMemory& memory, std::string_view name) {
  return find_named(memory, "object", name);
}

std::optional<NodeId> find_tool(const WorkingMemory& memory, std::string_view name) {
  return find_named(memory, "tool", name);
}

std::optional<std::string> mounted_tool_name(const WorkingMemory& memory) {
  for (const Wme* tool : memory.children_with(workspace_node(memory), "tool")) {
    if (memory.value_of(tool->id, "mounted") == Datum{true}) {
      return memory.string_of(tool->id, "name");
    }
  }
  return std::nullopt;
}

void set_mounted_tool(WorkingMemory& memory, std::string_view tool_name) {
  const std::string wanted = normalize_label(tool_name);
  if (!find_tool(memory, wanted)) {
    throw Error(ErrorCode::InvalidScenario, "no tool named '" + wanted + "' in the workspace");
  }
  for (const Wme* tool : memory.children_with(workspace_node(memory), "tool")) {
    const bool mount = memory.string_of(tool->id, "name") == wanted;
    if (memory.value_of(tool->id, "mounted") == Datum{mount}) {
      continue;
    }
    for (const Wme* flag : memory.children_with(tool->id, "mounted")) {
      memory.remove_wme(flag->id);
    }
    memory.add_wme(tool->id, "mounted", mount);
  }
}

std::vector<std::string> validate_workspace_memory(const WorkingMemory& memory) {
  std::vector<std::string> problems;
  for (const Wme* ws : memory.children_with(memory.root(), "workspace")) {
    int mounted = 0;
    std::set<std::string> tools;
    for (const Wme* tool : memory.children_with(ws->id, "tool")) {
      auto name = memory.string_of(tool->id, "name").value_or("");
      if (!tools.insert(name).second) {
        problems.push_back("duplicate tool name '" + name + "'");
      }
      if (memory.values_of(tool->id, "process").empty()) {
        problems.push_back("tool '" + name + "' offers no process");
      }
      for (const Datum& flag : memory.values_of(tool->id, "mounted")) {
        mounted += flag == Datum{true} ? 1 : 0;
      }
    }
    if (mounted > 1) {
      problems.push_back("more than one mounted tool");
    }
    std::set<std::string> objects;
    for (const Wme* object : memory.children_with(ws->id, "object")) {
      auto name = memory.string_of(object->id, "name").value_or("");
      if (!objects.insert(name).second) {
        problems.push_back("duplicate object name '" + name + "'");
      }
      bool has_structure = !memory.children_with(object->id, "build-structure").empty();
      bool has_task = !memory.children_with(object->id, "task").empty();
      if (has_structure && !has_task) {
        problems.push_back("object '" + name + "' has a build structure but no task");
      }
    }
  }
  return problems;
}

}  // namespace ccu
