// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#include <catch2/catch_amalgamated.hpp>

#include "ccu/engine.hpp"
#include "ccu/error.hpp"
#include "ccu/planner.hpp"
#include "ccu/task.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace ccu;
using namespace ccu::testing;

namespace {

// Each rule disables itself once it has fired so runs terminate.
const char* kPriorityRules =
    "rule low priority 3\n"
    "when:\n  (state, go, yes)\n  -(state, picked, <any>)\n"
    "then:\n  add(state, picked, low)\n"
    "rule high priority 5\n"
    "when:\n  (state, go, yes)\n  -(state, picked, <any>)\n"
    "then:\n  add(state, picked, high)\n";

// Same priority, bindings differ. The tie key of the a-binding sorts first.
const char* kTieRules =
    "rule pick priority 1\n"
    "when:\n  (state, label, <name>)\n  -(state, picked, <any>)\n"
    "then:\n  add(state, picked, <name>)\n";

}  // namespace

TEST_CASE("the higher priority proposal is selected", "[engine]") {
  WorkingMemory m;
  m.add_wme(m.root(), "go", std::string("yes"));
  const auto trace = run_to_quiescence(m, load_rules(kPriorityRules));
  REQUIRE(trace.cycles.size() == 1);
  CHECK(trace.cycles[0].proposals.size() == 2);
  CHECK(trace.cycles[0].selected()->rule_id == "high");
  CHECK(m.string_of(m.root(), "picked") == "high");
  CHECK(trace.quiescent);
}

TEST_CASE("equal priorities are broken by the tie key", "[engine]") {
  for (bool a_first : {true, false}) {
    WorkingMemory m;
    const std::vector<std::string> labels = a_first ? std::vector<std::string>{"a1", "b2"}
                                                    : std::vector<std::string>{"b2", "a1"};
    for (const auto& label : labels) {
      m.add_wme(m.root(), "label", label);
    }
    const auto trace = run_to_quiescence(m, load_rules(kTieRules));
    CHECK(m.string_of(m.root(), "picked") == "a1");
    const auto& proposals = trace.cycles.at(0).proposals;
    REQUIRE(proposals.size() == 2);
    CHECK(proposals[0].tie_key == "name=a1;");
    CHECK(proposals[1].tie_key == "name=b2;");
  }
}

TEST_CASE("the first cycle on the basin task fires match-task", "[engine]") {
  WorkingMemory m = build_memory(fixtures().basin);
  const NodeId object = *find_object(m, "basin");
  allocate_task(m, object, parse_triplet("sand, mineral cast, basin"));
  DecisionTrace trace;
  REQUIRE(run_cycle(m, fixtures().rules, trace).fired);
  CHECK(trace.cycles.at(0).cycle == 1);
  CHECK(trace.cycles[0].selected()->rule_id == "match-task");
}

TEST_CASE("an empty ruleset is quiescent immediately", "[engine]") {
  WorkingMemory m = build_memory(fixtures().basin);
  const std::string before = snapshot(m);
  const auto trace = run_to_quiescence(m, Ruleset{});
  CHECK(trace.quiescent);
  CHECK(trace.cycles_attempted == 1);
  CHECK(trace.firing_count() == 0);
  CHECK(snapshot(m) == before);
}

TEST_CASE("a looping ruleset stops at max_cycles and is marked truncated", "[engine]") {
  WorkingMemory m = build_memory(fixtures().empty);
  const Ruleset looping = load_rules_file(fixture_path("rules/looping.rules"));
  const auto trace = run_to_quiescence(m, looping, 50);
  CHECK(trace.truncated());
  CHECK(trace.cycles_attempted == 50);
  CHECK(trace.cycles.size() == 50);
  CHECK(trace_to_json(trace)["truncated"] == true);
  CHECK_THROWS_AS(run_to_quiescence(m, looping, 0), Error);
}

TEST_CASE("the default cycle budget applies", "[engine]") {
  WorkingMemory m = build_memory(fixtures().empty);
  const auto trace = run_to_quiescence(m, load_rules_file(fixture_path("rules/looping.rules")));
  CHECK(trace.cycles_attempted == kDefaultMaxCycles);
  CHECK(trace.truncated());
}

TEST_CASE("a failing action rolls the whole firing back", "[engine]") {
  // The first action succeeds, the second removes a fact that is not there.
  const Ruleset rules = load_rules(
      "rule broken priority 1\n"
      "when:\n  (state, go, yes)\n"
      "then:\n  add(state, marker, one)\n  remove(state, missing, fact)\n");
  WorkingMemory m;
  m.add_wme(m.root(), "go", std::string("yes"));
  const std::string before = snapshot(m);
  const auto counter = m.modification_count();
  DecisionTrace trace;
  try {
    run_cycle(m, rules, trace);
    FAIL("expected ActionFailed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ActionFailed);
    CHECK(std::string(e.what()).find("broken") != std::string::npos);
  }
  CHECK(snapshot(m) == before);
  CHECK(m.modification_count() == counter);
  CHECK(trace.cycles.empty());
}

TEST_CASE("every selected firing was the best proposal of its cycle", "[engine][property]") {
  // Checked against the recorded proposals using an ordering written out here.
  const auto better = [](const Proposal& a, const Proposal& b) {
    if (a.priority != b.priority) {
      return a.priority > b.priority;
    }
    if (a.tie_key != b.tie_key) {
      return a.tie_key < b.tie_key;
    }
    return a.rule_id < b.rule_id;
  };
  Rng rng(31);
  for (int round = 0; round < 100; ++round) {
    PlanningCase pc = random_planning_case(rng);
    WorkingMemory m = build_memory(pc.workspace);
    const ValidatedTask task = validate_triplet(pc.triplet, pc.workspace, pc.instructions);
    const CommandPlan plan = decompose(task, m, fixtures().rules);
    for (const auto& cycle : plan.trace.cycles) {
      const Firing* chosen = cycle.selected();
      if (chosen == nullptr) {
        continue;
      }
      const Proposal* best = nullptr;
      for (const auto& p : cycle.proposals) {
        if (best == nullptr || better(p, *best)) {
          best = &p;
        }
      }
      REQUIRE(best != nullptr);
      REQUIRE(best->rule_id == chosen->rule_id);
      REQUIRE(best->bindings == chosen->bindings);
      for (const auto& p : cycle.proposals) {
        REQUIRE(fixtures().rules.find(p.rule_id)->priority == p.priority);
      }
    }
  }
}

TEST_CASE("identical inputs give identical traces", "[engine]") {
  std::string reference;
  for (int run = 0; run < 20; ++run) {
    WorkingMemory m = build_memory(fixtures().connector);
    const ValidatedTask task =
        validate_triplet(parse_triplet("screw, aluminum, connector"), fixtures().connector, fixtures().instructions);
    const CommandPlan plan = decompose(task, m, fixtures().rules);
    const std::string text = serialize_trace(plan.trace) + snapshot(m);
    if (run == 0) {
      reference = text;
    }
    REQUIRE(text == reference);
  }
}

TEST_CASE("describe_node names tasks by their triplet", "[engine]") {
  WorkingMemory m = build_memory(fixtures().basin);
  const NodeId task = allocate_task(m, *find_object(m, "basin"), parse_triplet("sand, mineral cast, basin"));
  CHECK(describe_node(m, task) == "task sand/mineral cast/basin");
}
