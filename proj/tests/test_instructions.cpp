// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#include <catch2/catch_amalgamated.hpp>

#include "ccu/error.hpp"
#include "ccu/instructions.hpp"
#include "ccu/workspace.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace ccu;
using namespace ccu::testing;
using nlohmann::json;

namespace {

ErrorCode parse_error_code(const json& doc) {
  try {
    parse_instructions(doc.dump());
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("document was accepted: " << doc.dump());
  return ErrorCode::BadRequest;
}

json single_entry(json root) {
  return {{"version", "1.0"},
          {"entries", json::array({{{"object", "box"}, {"material", "oak"}, {"process", "sand"}, {"root", root}}})}};
}

std::size_t count_nodes_below(const WorkingMemory& m, NodeId top) {
  std::size_t n = 0;
  for (const auto& [id, wme] : m.elements()) {
    if (!wme.is_node()) {
      continue;
    }
    for (std::optional<NodeId> at = id; at; at = m.get(*at).parent) {
      if (*at == top) {
        ++n;
        break;
      }
    }
  }
  return n;
}

std::size_t count_components(const ComponentTemplate& c) {
  std::size_t n = 1;
  for (const auto& child : c.children) {
    n += count_components(child);
  }
  return n;
}

}  // namespace

TEST_CASE("basin sanding has seven passes of increasing grit", "[instructions]") {
  const auto& structure = fixtures().instructions.lookup("basin", "mineral cast", "sand");
  const auto order = execution_order(structure);
  REQUIRE(order.size() == 7);
  std::int64_t previous = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    CHECK(order[i].step->index == static_cast<int>(i + 1));
    CHECK(order[i].step->process == "sand");
    const auto grit = std::get<std::int64_t>(order[i].step->parameters.at("grit"));
    CHECK(grit > previous);
    previous = grit;
  }
}

TEST_CASE("lookup normalizes labels and reports missing keys", "[instructions]") {
  const auto& set = fixtures().instructions;
  CHECK(&set.lookup("  Basin ", "MINERAL   cast", "Sand") == &set.lookup("basin", "mineral cast", "sand"));
  CHECK(set.find("basin", "mineral cast", "weld") == nullptr);
  try {
    set.lookup("basin", "mineral cast", "weld");
    FAIL("expected NotFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotFound);
  }
}

TEST_CASE("connector screwing is four alignment then fourteen force steps", "[instructions]") {
  const auto order = execution_order(fixtures().instructions.lookup("connector", "aluminum", "screw"));
  REQUIRE(order.size() == 18);
  for (std::size_t i = 0; i < order.size(); ++i) {
    REQUIRE(order[i].component_path.size() == 2);
    CHECK(order[i].component_path.back() == (i < 4 ? "alignment screws" : "force screws"));
    CHECK(order[i].step->process == "screw");
  }
}

TEST_CASE("malformed trees are rejected", "[instructions]") {
  const json step = {{"index", 1}, {"process", "sand"}, {"description", "d"}};
  const json part_with_child = {{"name", "p"},
                                {"kind", "part"},
                                {"children", json::array({{{"name", "c"}, {"kind", "part"}}})}};
  CHECK(parse_error_code(single_entry(part_with_child)) == ErrorCode::InvalidTree);

  json gap_fixed = {{"name", "p"}, {"kind", "part"}, {"steps", json::array({step, step})}};
  gap_fixed["steps"][0]["index"] = 2;  // order in the document does not matter
  CHECK_NOTHROW(parse_instructions(single_entry(gap_fixed).dump()));
  json bad_gap = gap_fixed;
  bad_gap["steps"] = json::array({step, {{"index", 3}, {"process", "sand"}}});
  CHECK(parse_error_code(single_entry(bad_gap)) == ErrorCode::InvalidTree);

  json duplicate_children = {{"name", "a"},
                             {"kind", "assembly"},
                             {"children", json::array({{{"name", "x"}, {"kind", "part"}}, {{"name", "X"}, {"kind", "part"}}})}};
  CHECK(parse_error_code(single_entry(duplicate_children)) == ErrorCode::InvalidTree);

  json bad_grit = {{"name", "p"}, {"kind", "part"}, {"steps", json::array({{{"index", 1}, {"process", "sand"}, {"parameters", {{"grit", -5}}}}})}};
  CHECK(parse_error_code(single_entry(bad_grit)) == ErrorCode::InvalidTree);

  // a chain deeper than any realistic assembly is refused instead of recursing forever
  json deep = {{"name", "leaf"}, {"kind", "part"}};
  for (int i = 0; i < 80; ++i) {
    deep = {{"name", "n" + std::to_string(i)}, {"kind", "assembly"}, {"children", json::array({deep})}};
  }
  CHECK(parse_error_code(single_entry(deep)) == ErrorCode::InvalidTree);
}

TEST_CASE("structural parse errors", "[instructions]") {
  CHECK_THROWS_AS(parse_instructions("{"), Error);
  CHECK(parse_error_code({{"version", "1.0"}}) == ErrorCode::ParseError);
  CHECK(parse_error_code(single_entry({{"name", "p"}, {"kind", "widget"}})) == ErrorCode::ParseError);
  CHECK(parse_error_code(single_entry({{"name", "p"}, {"kind", "part"}, {"colour", "red"}})) == ErrorCode::ParseError);
  json twice = single_entry({{"name", "p"}, {"kind", "part"}});
  twice["entries"].push_back(twice["entries"][0]);
  twice["entries"][1]["object"] = "BOX";
  CHECK(parse_error_code(twice) == ErrorCode::DuplicateKey);
}

TEST_CASE("the fixture survives serialize and parse", "[instructions]") {
  const auto& set = fixtures().instructions;
  const std::string text = serialize_instructions(set);
  CHECK(parse_instructions(text) == set);
  CHECK(serialize_instructions(parse_instructions(text)) == text);
}

TEST_CASE("random trees survive serialize and parse", "[instructions][property]") {
  Rng rng(424242);
  const TreeLimits limits;
  for (int round = 0; round < 1000; ++round) {
    const auto structure = random_structure(rng, limits, "sand", {"rim", "bowl"});
    REQUIRE(tree_depth(structure.root) <= limits.max_depth);
    REQUIRE(max_fanout(structure.root) <= limits.max_children);
    REQUIRE(max_steps_per_component(structure.root) <= limits.max_steps);
    const BuildInstructionSet set("2.1", {InstructionEntry{{"box", "oak", "sand"}, structure}});
    const BuildInstructionSet back = parse_instructions(serialize_instructions(set));
    REQUIRE(back == set);
  }
}

TEST_CASE("instantiation creates one node per component, process and step", "[instructions]") {
  WorkingMemory m = build_memory(fixtures().basin);
  const NodeId object = *find_object(m, "basin");
  const auto& structure = fixtures().instructions.lookup("basin", "mineral cast", "sand");
  const NodeId bs = instantiate(m, object, structure);
  // build-structure + (component + production-process) per component + steps
  CHECK(count_nodes_below(m, bs) == 1 + 2 * 1 + 7);
  CHECK(m.validate().empty());
  CHECK_THROWS_AS(instantiate(m, object, structure), Error);
}

TEST_CASE("instantiated structures read back unchanged", "[instructions][property]") {
  Rng rng(77);
  for (int round = 0; round < 300; ++round) {
    const auto structure = random_structure(rng, {}, "polish", {"edge"});
    WorkingMemory m;
    const NodeId object = m.add_node(m.root(), "object");
    m.add_wme(object, "region", std::string("edge"));
    const NodeId bs = instantiate(m, object, structure);
    std::size_t steps = execution_order(structure).size();
    REQUIRE(count_nodes_below(m, bs) == 1 + 2 * count_components(structure.root) + steps);
    REQUIRE(read_build_structure(m, bs) == structure);
    REQUIRE(m.validate().empty());
  }
}

TEST_CASE("execution order matches a reference post-order walk", "[instructions][property]") {
  Rng rng(2024);
  for (int round = 0; round < 500; ++round) {
    const auto structure = random_structure(rng, {}, "screw", {});
    const auto order = execution_order(structure);
    const auto reference = reference_walk(structure.root);
    REQUIRE(order.size() == reference.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      std::string path;
      for (const auto& part : order[i].component_path) {
        path += (path.empty() ? "" : "/") + part;
      }
      REQUIRE(path == reference[i].path);
      REQUIRE(order[i].step == reference[i].step);
    }
  }
}

TEST_CASE("normalize_label trims, collapses and lowercases", "[instructions]") {
  CHECK(normalize_label("  Mineral \t  Cast ") == "mineral cast");
  CHECK(normalize_label("") == "");
  CHECK(normalize_label("   ") == "");
}
