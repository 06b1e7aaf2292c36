// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#include "ccu/instructions.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "ccu/error.hpp"
#include "json.hpp"

namespace ccu {

using nlohmann::json;

namespace {

constexpr std::string_view kParamPrefix = "param:";

[[noreturn]] void parse_fail(const std::string& path, const std::string& reason) {
  throw Error(ErrorCode::ParseError, path + ": " + reason);
}

[[noreturn]] void tree_fail(const std::string& path, const std::string& reason) {
  throw Error(ErrorCode::InvalidTree, path + ": " + reason);
}

void reject_unknown(const json& object, std::initializer_list<std::string_view> allowed,
                    const std::string& path) {
  if (!object.is_object()) {
    parse_fail(path, "expected an object");
  }
  for (const auto& [key, value] : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      parse_fail(path, "unknown field '" + key + "'");
    }
  }
}

const json& required(const json& object, const char* field, const std::string& path) {
  auto it = object.find(field);
  if (it == object.end()) {
    parse_fail(path, std::string("missing field '") + field + "'");
  }
  return *it;
}

std::string required_string(const json& object, const char* field, const std::string& path) {
  const json& value = required(object, field, path);
  if (!value.is_string()) {
    parse_fail(path + "." + field, "expected a string");
  }
  return value.get<std::string>();
}

Scalar parse_scalar(const json& value, const std::string& path) {
  if (value.is_string()) {
    return value.get<std::string>();
  }
  if (value.is_boolean()) {
    return value.get<bool>();
  }
  if (value.is_number_integer()) {
    return value.get<std::int64_t>();
  }
  if (value.is_number_float()) {
    return value.get<double>();
  }
  parse_fail(path, "parameter values must be scalars");
}

json scalar_json(const Scalar& scalar) {
  return std::visit([](const auto& v) { return json(v); }, scalar);
}

StepTemplate parse_step(const json& node, const std::string& path) {
  reject_unknown(node, {"index", "process", "parameters", "region", "description"}, path);
  StepTemplate step;
  const json& index = required(node, "index", path);
  if (!index.is_number_integer()) {
    parse_fail(path + ".index", "expected an integer");
  }
  step.index = index.get<int>();
  step.process = normalize_label(required_string(node, "process", path));
  if (step.process.empty()) {
    tree_fail(path + ".process", "process label is empty");
  }
  if (auto it = node.find("parameters"); it != node.end()) {
    if (!it->is_object()) {
      parse_fail(path + ".parameters", "expected an object");
    }
    for (const auto& [key, value] : it->items()) {
      step.parameters.emplace(key, parse_scalar(value, path + ".parameters." + key));
    }
  }
  if (auto grit = step.parameters.find("grit"); grit != step.parameters.end()) {
    const auto* value = std::get_if<std::int64_t>(&grit->second);
    if (value == nullptr || *value <= 0) {
      tree_fail(path + ".parameters.grit", "grit must be a positive integer");
    }
  }
  if (auto it = node.find("region"); it != node.end() && !it->is_null()) {
    if (!it->is_string()) {
      parse_fail(path + ".region", "expected a string");
    }
    step.region = normalize_label(it->get<std::string>());
    if (step.region->empty()) {
      tree_fail(path + ".region", "region label is empty");
    }
  }
  if (auto it = node.find("description"); it != node.end()) {
    if (!it->is_string()) {
      parse_fail(path + ".description", "expected a string");
    }
    step.description = it->get<std::string>();
  }
  return step;
}

ComponentTemplate parse_component(const json& node, const std::string& path, int depth) {
  if (depth > 64) {
    tree_fail(path, "component tree is too deep");
  }
  reject_unknown(node, {"name", "kind", "children", "steps"}, path);
  ComponentTemplate component;
  component.name = required_string(node, "name", path);
  if (normalize_label(component.name).empty()) {
    tree_fail(path + ".name", "component name is empty");
  }
  const std::string kind = required_string(node, "kind", path);
  if (kind == "assembly") {
    component.kind = ComponentKind::assembly;
  } else if (kind == "part") {
    component.kind = ComponentKind::part;
  } else {
    parse_fail(path + ".kind", "expected \"assembly\" or \"part\", got \"" + kind + "\"");
  }

  if (auto it = node.find("children"); it != node.end()) {
    if (!it->is_array()) {
      parse_fail(path + ".children", "expected an array");
    }
    std::set<std::string> names;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string child_path = path + ".children[" + std::to_string(i) + "]";
      auto child = parse_component((*it)[i], child_path, depth + 1);
      if (!names.insert(normalize_label(child.name)).second) {
        tree_fail(child_path, "duplicate child name '" + child.name + "'");
      }
      component.children.push_back(std::move(child));
    }
  }
  if (component.kind == ComponentKind::part && !component.children.empty()) {
    tree_fail(path, "part '" + component.name + "' has children");
  }

  if (auto it = node.find("steps"); it != node.end()) {
    if (!it->is_array()) {
      parse_fail(path + ".steps", "expected an array");
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
      component.steps.push_back(parse_step((*it)[i], path + ".steps[" + std::to_string(i) + "]"));
    }
  }
  std::sort(component.steps.begin(), component.steps.end(),
            [](const StepTemplate& a, const StepTemplate& b) { return a.index < b.index; });
  for (std::size_t i = 0; i < component.steps.size(); ++i) {
    if (component.steps[i].index != static_cast<int>(i + 1)) {
      tree_fail(path + ".steps", "step indices of '" + component.name + "' are not contiguous 1.." +
                                     std::to_string(component.steps.size()));
    }
  }
  return component;
}

json component_json(const ComponentTemplate& component) {
  json children = json::array();
  for (const auto& child : component.children) {
    children.push_back(component_json(child));
  }
  json steps = json::array();
  for (const auto& step : component.steps) {
    json parameters = json::object();
    for (const auto& [key, value] : step.parameters) {
      parameters[key] = scalar_json(value);
    }
    json s = {{"index", step.index},
              {"process", step.process},
              {"parameters", parameters},
              {"description", step.description}};
    if (step.region) {
      s["region"] = *step.region;
    }
    steps.push_back(std::move(s));
  }
  return {{"name", component.name},
          {"kind", std::string(to_string(component.kind))},
          {"children", children},
          {"steps", steps}};
}

void walk(const ComponentTemplate& component, std::vector<std::string>& path,
          std::vector<StepRef>& out) {
  path.push_back(component.name);
  for (const auto& child : component.children) {
    walk(child, path, out);
  }
  for (const auto& step : component.steps) {
    out.push_back({path, &step});
  }
  path.pop_back();
}

void build_component(WorkingMemory& memory, NodeId parent, const ComponentTemplate& component,
                     std::vector<std::pair<NodeId, const StepTemplate*>>& order) {
  const NodeId node = memory.add_node(parent, "component");
  memory.add_wme(node, "name", component.name);
  memory.add_wme(node, "kind", std::string(to_string(component.kind)));
  const NodeId process = memory.add_node(node, "production-process");
  std::vector<std::pair<NodeId, const StepTemplate*>> own;
  for (const auto& step : component.steps) {
    const NodeId s = memory.add_node(process, "step");
    memory.add_wme(s, "index", std::int64_t{step.index});
    memory.add_wme(s, "process", step.process);
    memory.add_wme(s, "description", step.description);
    if (step.region) {
      memory.add_wme(s, "region", *step.region);
    }
    for (const auto& [key, value] : step.parameters) {
      std::visit([&](const auto& v) { memory.add_wme(s, std::string(kParamPrefix) + key, v); }, value);
    }
    own.emplace_back(s, &step);
  }
  for (const auto& child : component.children) {
    build_component(memory, node, child, order);
  }
  order.insert(order.end(), own.begin(), own.end());
}

ComponentTemplate read_component(const WorkingMemory& memory, NodeId node) {
  ComponentTemplate component;
  component.name = memory.string_of(node, "name").value_or("");
  component.kind =
      memory.string_of(node, "kind").value_or("part") == "assembly" ? ComponentKind::assembly
                                                                   : ComponentKind::part;
  if (auto process = memory.node_of(node, "production-process")) {
    for (const Wme* s : memory.children_with(*process, "step")) {
      StepTemplate step;
      for (NodeId field : memory.children(s->id)) {
        const Wme& w = memory.get(field);
        const Datum d = w.datum();
        if (w.attribute == "index") {
          step.index = static_cast<int>(std::get<std::int64_t>(d));
        } else if (w.attribute == "process") {
          step.process = std::get<std::string>(d);
        } else if (w.attribute == "description") {
          step.description = std::get<std::string>(d);
        } else if (w.attribute == "region") {
          step.region = std::get<std::string>(d);
        } else if (w.attribute.starts_with(kParamPrefix)) {
          std::string key = w.attribute.substr(kParamPrefix.size());
          std::visit(
              [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (!std::is_same_v<T, NodeId>) {
                  step.parameters.emplace(key, v);
                }
              },
              d);
        }
      }
      component.steps.push_back(std::move(step));
    }
  }
  for (const Wme* child : memory.children_with(node, "component")) {
    component.children.push_back(read_component(memory, child->id));
  }
  return component;
}

}  // namespace

std::string_view to_string(ComponentKind kind) {
  return kind == ComponentKind::assembly ? "assembly" : "part";
}

std::string normalize_label(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

BuildInstructionSet::BuildInstructionSet(std::string version, std::vector<InstructionEntry> entries,
                                         std::string source_path)
    : version_(std::move(version)), source_path_(std::move(source_path)), entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& key = entries_[i].key;
    key = {normalize_label(key.object), normalize_label(key.material), normalize_label(key.process)};
    if (!index_.emplace(key, i).second) {
      throw Error(ErrorCode::DuplicateKey, "duplicate instruction entry (" + key.object + ", " +
                                               key.material + ", " + key.process + ")");
    }
  }
}

const BuildStructureTemplate* BuildInstructionSet::find(std::string_view object, std::string_view material,
                                                        std::string_view process) const {
  auto it = index_.find({normalize_label(object), normalize_label(material), normalize_label(process)});
  return it == index_.end() ? nullptr : &entries_[it->second].structure;
}

const BuildStructureTemplate& BuildInstructionSet::lookup(std::string_view object,
                                                          std::string_view material,
                                                          std::string_view process) const {
  if (const auto* found = find(object, material, process)) {
    return *found;
  }
  throw Error(ErrorCode::NotFound, "no build instructions for (" + normalize_label(object) + ", " +
                                       normalize_label(material) + ", " + normalize_label(process) + ")");
}

BuildInstructionSet parse_instructions(std::string_view document, std::string source_path) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    parse_fail("$", e.what());
  }
  reject_unknown(root, {"version", "entries"}, "$");
  std::string version = required_string(root, "version", "$");
  const json& entries = required(root, "entries", "$");
  if (!entries.is_array()) {
    parse_fail("$.entries", "expected an array");
  }
  std::vector<InstructionEntry> parsed;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string path = "$.entries[" + std::to_string(i) + "]";
    const json& entry = entries[i];
    reject_unknown(entry, {"object", "material", "process", "root"}, path);
    InstructionEntry item;
    item.key.object = normalize_label(required_string(entry, "object", path));
    item.key.material = normalize_label(required_string(entry, "material", path));
    item.key.process = normalize_label(required_string(entry, "process", path));
    if (item.key.object.empty() || item.key.material.empty() || item.key.process.empty()) {
      parse_fail(path, "object, material and process must be non-empty");
    }
    item.structure.root = parse_component(required(entry, "root", path), path + ".root", 1);
    parsed.push_back(std::move(item));
  }
  return BuildInstructionSet(std::move(version), std::move(parsed), std::move(source_path));
}

BuildInstructionSet load_instructions_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw Error(ErrorCode::ParseError, "cannot open instruction file '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_instructions(buffer.str(), path);
}

std::string serialize_instructions(const BuildInstructionSet& set) {
  json entries = json::array();
  for (const auto& entry : set.entries()) {
    entries.push_back({{"object", entry.key.object},
                       {"material", entry.key.material},
                       {"process", entry.key.process},
                       {"root", component_json(entry.structure.root)}});
  }
  json doc = {{"version", set.version()}, {"entries", entries}};
  return doc.dump(2) + "\n";
}

std::vector<StepRef> execution_order(const BuildStructureTemplate& structure) {
  std::vector<StepRef> out;
  std::vector<std::string> path;
  walk(structure.root, path, out);
  return out;
}

NodeId instantiate(WorkingMemory& memory, NodeId object, const BuildStructureTemplate& structure) {
  if (!memory.children_with(object, "build-structure").empty()) {
    throw Error(ErrorCode::AlreadyAttached, "object already has a build structure");
  }
  const NodeId build = memory.add_node(object, "build-structure");
  std::vector<std::pair<NodeId, const StepTemplate*>> order;
  build_component(memory, build, structure.root, order);

  if (!order.empty()) {
    memory.add_wme(build, "first-step", Link{order.front().first});
    memory.add_wme(build, "final-step", Link{order.back().first});
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      memory.add_wme(order[i].first, "next", Link{order[i + 1].first});
    }
  }

  std::set<NodeId> finishing;
  for (const Datum& region_value : memory.values_of(object, "region")) {
    const auto* region = std::get_if<std::string>(&region_value);
    if (region == nullptr) {
      continue;
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const StepTemplate& step = *it->second;
      if (!step.region || *step.region == *region) {
        if (finishing.insert(it->first).second) {
          memory.add_wme(build, "finishing-step", Link{it->first});
        }
        memory.add_wme(it->first, "finishes", *region);
        break;
      }
    }
  }
  return build;
}

BuildStructureTemplate read_build_structure(const WorkingMemory& memory, NodeId build_structure) {
  BuildStructureTemplate structure;
  if (auto root = memory.node_of(build_structure, "component")) {
    structure.root = read_component(memory, *root);
  }
  return structure;
}

}  // namespace ccu
