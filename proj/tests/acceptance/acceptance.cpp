// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors
//
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Thresholds are fixed here, not read from anywhere.

#include <chrono>
#include <filesystem>
#include <functional>
#include <future>
#include <iostream>
#include <sstream>

#include "ccu/cli.hpp"
#include "ccu/error.hpp"
#include "ccu/http_service.hpp"
#include "httplib.h"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace ccu;
using namespace ccu::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kBasinSteps = 7;
constexpr int kAlignmentScrews = 4;
constexpr int kForceScrews = 14;
constexpr std::int64_t kBasinRuntimeLimitMs = 1000;
constexpr double kBasinTimeCompression = 0.0005;  // about 0.4 s of real sleeping
constexpr int kOracleTrees = 1000;
constexpr TreeLimits kTreeLimits{4, 5, 6};
constexpr int kDeterminismRuns = 100;
constexpr int kInvariantCases = 500;
constexpr int kCombinationScenarios = 50;
constexpr int kLoopingMaxCycles = kDefaultMaxCycles;
constexpr std::chrono::seconds kLoopingDeadline{30};

struct Result {
  bool pass = true;
  std::string detail;
};

// Accumulates failures; the first few are kept for the report.
struct Check {
  int failures = 0;
  std::vector<std::string> notes;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      ++failures;
      if (notes.size() < 3) {
        notes.push_back(what);
      }
    }
  }
  Result result(const std::string& ok_detail) const {
    if (failures == 0) {
      return {true, ok_detail};
    }
    std::string detail = std::to_string(failures) + " failure(s)";
    for (const auto& n : notes) {
      detail += "; " + n;
    }
    return {false, detail};
  }
};

const std::string& instructions_path() {
  static const std::string path = fixture_path("instructions/build_instructions.json");
  return path;
}
const std::string& rules_path() {
  static const std::string path = fixture_path("rules/decompose.rules");
  return path;
}

CommandPlan plan_fixture(const Workspace& ws, const TaskTriplet& triplet, WorkingMemory* keep = nullptr) {
  WorkingMemory local = build_memory(ws);
  WorkingMemory& m = keep ? (*keep = build_memory(ws)) : local;
  return decompose(validate_triplet(triplet, ws, fixtures().instructions), m, fixtures().rules);
}

int count_kind(const CommandPlan& plan, CommandKind kind) {
  int n = 0;
  for (const auto& c : plan.commands) {
    n += c.kind == kind ? 1 : 0;
  }
  return n;
}

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr) {
  std::vector<const char*> argv{"ccu"};
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  std::istringstream in;
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), in, out, err);
  if (out_text) {
    *out_text = out.str();
  }
  return code;
}

struct LiveService {
  Orchestrator orchestrator;
  HttpService http;
  int port;
  httplib::Client client;
  explicit LiveService(const Workspace& ws)
      : orchestrator(OrchestratorConfig{}, ws, fixtures().instructions, fixtures().rules),
        http(orchestrator),
        port(http.bind("127.0.0.1", 0)),
        client("127.0.0.1", port) {
    http.start();
    client.set_read_timeout(10, 0);
  }
  ~LiveService() {
    http.stop();
    orchestrator.stop();
  }
};

// ---------------------------------------------------------------------------

Result basin_end_to_end() {
  Check check;
  const TaskTriplet triplet{"sand", "mineral cast", "basin"};
  const CommandPlan plan = plan_fixture(fixtures().basin, triplet);
  check.require(plan.commands.size() == 2 + kBasinSteps, "basin plan has " + std::to_string(plan.commands.size()) + " commands");
  check.require(count_kind(plan, CommandKind::check_end_effector) == 1, "check_end_effector count");
  check.require(count_kind(plan, CommandKind::execute_step) == kBasinSteps, "execute_step count");
  check.require(count_kind(plan, CommandKind::operator_check) == 1, "operator_check count");
  check.require(count_kind(plan, CommandKind::change_end_effector) == 0, "unexpected tool change");
  std::int64_t grit = 0;
  for (const auto& c : plan.commands) {
    if (c.kind == CommandKind::execute_step) {
      const auto g = c.payload["parameters"].value("grit", std::int64_t{0});
      check.require(g > grit, "grit not strictly increasing at seq " + std::to_string(c.seq));
      grit = g;
    }
  }

  const CommandPlan swapped = plan_fixture(fixtures().basin_gripper, triplet);
  check.require(swapped.commands.size() == 3 + kBasinSteps, "mismatched-tool plan has " +
                                                                std::to_string(swapped.commands.size()) + " commands");
  check.require(count_kind(swapped, CommandKind::change_end_effector) == 1, "change_end_effector count");
  check.require(swapped.commands.size() > 1 && swapped.commands[1].kind == CommandKind::change_end_effector,
                "change_end_effector not at position 2");

  // Full run: plan, execute with real (compressed) sleeping, accept.
  const auto start = std::chrono::steady_clock::now();
  WorkingMemory m;
  const CommandPlan timed = plan_fixture(fixtures().basin, triplet, &m);
  RobotState robot{"sander"};
  LogicalClock clock;
  const ExecutionLog log = execute_plan(
      timed, robot, {}, [](const PlannedCommand&) { return true; }, clock, {kBasinTimeCompression, true});
  const auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  check.require(!log.failed && !log.awaiting_operator, "execution did not complete");
  check.require(elapsed < kBasinRuntimeLimitMs, "runtime " + std::to_string(elapsed) + " ms");
  return check.result("9 commands, grit strictly increasing, 10 with change at position 2, run " +
                      std::to_string(elapsed) + " ms < " + std::to_string(kBasinRuntimeLimitMs) + " ms");
}

Result connector_fixture() {
  Check check;
  const CommandPlan plan = plan_fixture(fixtures().connector, {"screw", "aluminum", "connector"});
  std::vector<std::string> components;
  for (const auto& c : plan.commands) {
    if (c.kind == CommandKind::execute_step) {
      components.push_back(c.payload["component"].get<std::string>());
    }
  }
  check.require(components.size() == kAlignmentScrews + kForceScrews,
                std::to_string(components.size()) + " execute_steps");
  for (std::size_t i = 0; i < components.size(); ++i) {
    const char* expected = i < kAlignmentScrews ? "alignment screws" : "force screws";
    check.require(components[i] == expected, "step " + std::to_string(i + 1) + " is " + components[i]);
  }
  check.require(!plan.commands.empty() && plan.commands.front().kind == CommandKind::check_end_effector,
                "missing precondition");
  check.require(!plan.commands.empty() && plan.commands.back().kind == CommandKind::operator_check,
                "missing postcondition");
  check.require(count_kind(plan, CommandKind::operator_check) == 1, "operator_check count");
  return check.result("4 alignment steps then 14 force steps inside check/operator_check envelope");
}

Result oracle_equivalence() {
  Check check;
  Rng rng(20261016);
  int max_depth = 0;
  int total_steps = 0;
  for (int i = 0; i < kOracleTrees; ++i) {
    PlanningCase pc = random_planning_case(rng, kTreeLimits);
    const auto& root = pc.instructions.entries().front().structure.root;
    check.require(tree_depth(root) <= kTreeLimits.max_depth && max_fanout(root) <= kTreeLimits.max_children &&
                      max_steps_per_component(root) <= kTreeLimits.max_steps,
                  "generator exceeded limits on case " + std::to_string(i));
    max_depth = std::max(max_depth, tree_depth(root));
    WorkingMemory m = build_memory(pc.workspace);
    try {
      const CommandPlan plan =
          decompose(validate_triplet(pc.triplet, pc.workspace, pc.instructions), m, fixtures().rules);
      total_steps += count_kind(plan, CommandKind::execute_step);
      check.require(without_provenance(plan_to_json(plan)) ==
                        expected_plan(pc.workspace, pc.instructions.entries().front().structure, pc.triplet),
                    "mismatch on case " + std::to_string(i));
    } catch (const Error& e) {
      check.require(false, "case " + std::to_string(i) + " threw " + std::string(e.code_name()));
    }
  }
  return check.result(std::to_string(kOracleTrees) + " random trees (max depth seen " + std::to_string(max_depth) +
                      ", " + std::to_string(total_steps) + " steps) equal the post-order oracle");
}

Result determinism() {
  Check check;
  const std::vector<std::pair<const Workspace*, TaskTriplet>> cases{
      {&fixtures().basin, {"sand", "mineral cast", "basin"}},
      {&fixtures().basin, {"polish", "mineral cast", "basin"}},
      {&fixtures().basin_gripper, {"sand", "mineral cast", "basin"}},
      {&fixtures().connector, {"screw", "aluminum", "connector"}},
  };
  for (const auto& [ws, triplet] : cases) {
    std::string plan_ref;
    std::string trace_ref;
    for (int run = 0; run < kDeterminismRuns; ++run) {
      const CommandPlan plan = plan_fixture(*ws, triplet);
      const std::string p = serialize_plan(plan);
      const std::string t = serialize_trace(plan.trace);
      if (run == 0) {
        plan_ref = p;
        trace_ref = t;
      }
      check.require(p == plan_ref && t == trace_ref, triplet.to_string() + " differs on run " + std::to_string(run));
    }
  }
  return check.result(std::to_string(kDeterminismRuns) + " runs x " + std::to_string(cases.size()) +
                      " fixtures, byte-identical plan and trace serializations");
}

Result invariants() {
  Check check;
  int plans = 0;
  int histories = 0;
  Rng rng(606);
  auto audit_plan = [&](const CommandPlan& plan, const Workspace& ws, const std::string& label) {
    ++plans;
    for (const auto& v : plan_violations(plan, ws, fixtures().rules)) {
      check.require(false, label + ": " + v);
    }
  };
  for (int i = 0; i < kInvariantCases; ++i) {
    PlanningCase pc = random_planning_case(rng);
    WorkingMemory m = build_memory(pc.workspace);
    const CommandPlan plan =
        decompose(validate_triplet(pc.triplet, pc.workspace, pc.instructions), m, fixtures().rules);
    const std::string label = "case " + std::to_string(i);
    audit_plan(plan, pc.workspace, label);

    // Lifecycle through execution, optional rework, confirmation.
    std::vector<TaskStatus> history{TaskStatus::submitted, TaskStatus::matched, TaskStatus::planned};
    check.require(task_status(m, plan.task_node) == TaskStatus::planned, label + ": not planned");
    set_task_status(m, plan.task_node, TaskStatus::executing);
    history.push_back(TaskStatus::executing);
    RobotState robot{pc.workspace.mounted_tool() ? pc.workspace.mounted_tool()->name : ""};
    LogicalClock clock;
    const ExecutionLog log = execute_plan(plan, robot, {}, {}, clock, {1.0, false});
    for (const auto& v : event_log_violations(plan, log)) {
      check.require(false, label + ": " + v);
    }
    set_task_status(m, plan.task_node, TaskStatus::awaiting_confirmation);
    history.push_back(TaskStatus::awaiting_confirmation);
    const auto& regions = pc.workspace.objects.front().regions;
    if (!regions.empty() && chance(rng, 0.5)) {
      const std::string region = pick(rng, regions);
      if (!expected_rework(pc.workspace, pc.instructions.entries().front().structure, pc.triplet, {region}).is_null()) {
        const ConfirmOutcome outcome =
            confirm_postcondition(m, plan.task_node, Verdict::reject({region}), fixtures().rules);
        history.push_back(outcome.status);
        audit_plan(*outcome.rework, pc.workspace, label + " rework");
        set_task_status(m, plan.task_node, TaskStatus::awaiting_confirmation);
        history.push_back(TaskStatus::awaiting_confirmation);
      }
    }
    history.push_back(confirm_postcondition(m, plan.task_node, Verdict::accept(), fixtures().rules).status);
    ++histories;
    for (const auto& v : status_violations(history)) {
      check.require(false, label + ": " + v);
    }
    check.require(m.validate().empty(), label + ": memory integrity");
  }

  // Histories recorded by the running service, including a fault.
  for (const bool fault : {false, true}) {
    OrchestratorConfig config;
    if (fault) {
      config.fault_at_seq = 4;
    }
    Orchestrator orch(config, fixtures().basin, fixtures().instructions, fixtures().rules);
    const std::string a = orch.submit_task({"sand", "mineral cast", "basin"});
    const std::string b = orch.submit_task({"polish", "mineral cast", "basin"});
    for (const auto& id : {a, b}) {
      const TaskRecord r = orch.wait_for_status(id, TaskStatus::awaiting_confirmation);
      if (r.status == TaskStatus::awaiting_confirmation) {
        orch.confirm(id, Verdict::accept());
      }
    }
    orch.wait_idle();
    for (const auto& record : orch.list_tasks()) {
      ++histories;
      check.require(is_terminal(record.status), record.id + " not terminal");
      for (const auto& v : status_violations(record.history)) {
        check.require(false, record.id + ": " + v);
      }
    }
  }
  return check.result(std::to_string(plans) + " plans and " + std::to_string(histories) +
                      " lifecycles, 0 violations");
}

Result explanation_completeness() {
  Check check;
  int commands = 0;
  for (const auto& [ws, triplet] : std::vector<std::pair<const Workspace*, TaskTriplet>>{
           {&fixtures().basin, {"sand", "mineral cast", "basin"}},
           {&fixtures().basin_gripper, {"sand", "mineral cast", "basin"}},
           {&fixtures().connector, {"screw", "aluminum", "connector"}}}) {
    Orchestrator orch(OrchestratorConfig{}, *ws, fixtures().instructions, fixtures().rules);
    const std::string id = orch.submit_task(triplet);
    orch.wait_for_status(id, TaskStatus::awaiting_confirmation);
    if (ws->objects.front().regions.size() > 0) {
      orch.request_rework(id, {ws->objects.front().regions.front()});
      for (int i = 0; i < 400 && orch.get_task(id).history.size() < 7; ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
      }
    }
    orch.confirm(id, Verdict::accept());
    orch.wait_idle();
    const TaskRecord record = orch.get_task(id);
    check.require(record.status == TaskStatus::done, id + " not done");
    check.require(record.plans.size() == record.explanations.size(), id + " plan/explanation count");
    for (std::size_t p = 0; p < record.plans.size() && p < record.explanations.size(); ++p) {
      const json& plan = record.plans[p];
      const json& entries = record.explanations[p];
      check.require(plan.size() == entries.size(), id + " plan " + std::to_string(p) + " entry count");
      for (std::size_t i = 0; i < plan.size() && i < entries.size(); ++i) {
        ++commands;
        check.require(entries[i]["seq"] == plan[i]["seq"], id + " seq mismatch");
        check.require(fixtures().rules.contains(entries[i]["rule"].get<std::string>()), id + " unknown rule");
        check.require(!entries[i]["facts"].empty(), id + " entry without facts");
      }
    }
  }

  // The looping ruleset must stop at the cycle limit and say so.
  const Ruleset looping = load_rules_file(fixture_path("rules/looping.rules"));
  auto future = std::async(std::launch::async, [&looping] {
    WorkingMemory m = build_memory(fixtures().basin);
    return run_to_quiescence(m, looping, kLoopingMaxCycles);
  });
  int attempted = 0;
  if (future.wait_for(kLoopingDeadline) != std::future_status::ready) {
    check.require(false, "looping ruleset did not stop within the deadline");
    future.wait();
  } else {
    const DecisionTrace trace = future.get();
    attempted = trace.cycles_attempted;
    check.require(trace.truncated(), "looping trace not marked truncated");
    check.require(trace_to_json(trace)["truncated"] == true, "truncation missing from trace JSON");
    check.require(trace.cycles_attempted == kLoopingMaxCycles, "stopped at " + std::to_string(attempted));
  }
  std::string out;
  const int code = run_cli({"run", "--scenario", fixture_path("scenarios/basin.json"), "--instructions",
                            instructions_path(), "--rules", fixture_path("rules/looping.rules"), "--triplet",
                            "sand - mineral cast - basin", "--max-cycles", "500"},
                           &out);
  check.require(code == cli::exit_code::planning, "looping CLI run exited " + std::to_string(code));
  return check.result(std::to_string(commands) + " commands explained by loaded rules; looping ruleset truncated at " +
                      std::to_string(attempted) + " cycles");
}

Result combinations() {
  Check check;
  Rng rng(50);
  std::size_t total = 0;
  for (int i = 0; i < kCombinationScenarios; ++i) {
    const ScenarioCase sc = random_scenario(rng);
    const auto listed = valid_combinations(sc.workspace, sc.instructions);
    const std::set<TaskTriplet> as_set(listed.begin(), listed.end());
    total += listed.size();
    check.require(as_set.size() == listed.size(), "duplicates in scenario " + std::to_string(i));
    check.require(as_set == brute_force_combinations(sc.workspace, sc.instructions, process_pool(), material_pool(),
                                                     object_pool()),
                  "scenario " + std::to_string(i) + " differs from the filtered cross product");
  }
  return check.result(std::to_string(kCombinationScenarios) + " random scenarios, " + std::to_string(total) +
                      " combinations, equal to the filtered cross product");
}

Result parity() {
  Check check;
  const fs::path plan_file = fs::temp_directory_path() / "ccu-acceptance-plan.json";
  int compared = 0;
  for (const auto& [scenario, triplet] : std::vector<std::pair<std::string, std::string>>{
           {"basin.json", "sand - mineral cast - basin"},
           {"basin.json", "polish - mineral cast - basin"},
           {"basin_gripper_mounted.json", "sand - mineral cast - basin"},
           {"connector.json", "screw - aluminum - connector"}}) {
    const std::string scenario_path = fixture_path("scenarios/" + scenario);
    const int code = run_cli({"run", "--scenario", scenario_path, "--instructions", instructions_path(), "--rules",
                              rules_path(), "--triplet", triplet, "--auto-confirm", "--plan-out", plan_file.string()});
    check.require(code == 0, "CLI exited " + std::to_string(code));
    const std::string cli_bytes = read_file(plan_file.string());

    LiveService s(load_scenario_file(scenario_path));
    auto created = s.client.Post("/tasks", json{{"triplet", triplet}}.dump(), "application/json");
    if (!created || created->status != 201) {
      check.require(false, "POST /tasks failed for " + triplet);
      continue;
    }
    const std::string id = json::parse(created->body)["id"];
    s.orchestrator.wait_for_status(id, TaskStatus::awaiting_confirmation);
    auto plan = s.client.Get("/tasks/" + id + "/plan");
    check.require(plan && plan->body == cli_bytes, triplet + ": plan bytes differ");
    ++compared;

    // Resume: a read from 0 equals prefix + read from every cut point.
    auto full = s.client.Get("/events?since=0");
    const json all = json::parse(full->body)["events"];
    for (std::size_t cut = 0; cut <= all.size(); ++cut) {
      json joined = json::array();
      for (std::size_t i = 0; i < cut; ++i) {
        joined.push_back(all[i]);
      }
      auto rest = s.client.Get("/events?since=" + std::to_string(cut));
      const json page_rest = json::parse(rest->body);
      for (const auto& e : page_rest["events"]) {
        joined.push_back(e);
      }
      check.require(joined == all, triplet + ": resume at " + std::to_string(cut) + " differs");
    }
    s.orchestrator.confirm(id, Verdict::accept());
  }
  fs::remove(plan_file);
  return check.result(std::to_string(compared) + " fixtures byte-identical via CLI and GET /tasks/{id}/plan; "
                      "resume at every cursor equals a single read");
}

Result rework() {
  Check check;
  const TaskTriplet triplet{"sand", "mineral cast", "basin"};
  const auto& structure = fixtures().instructions.lookup("basin", "mineral cast", "sand");
  std::int64_t finest = 0;
  for (const auto& ref : execution_order(structure)) {
    finest = std::max(finest, std::get<std::int64_t>(ref.step->parameters.at("grit")));
  }
  for (const auto& region : fixtures().basin.objects.front().regions) {
    WorkingMemory m;
    const CommandPlan plan = plan_fixture(fixtures().basin, triplet, &m);
    set_task_status(m, plan.task_node, TaskStatus::executing);
    set_task_status(m, plan.task_node, TaskStatus::awaiting_confirmation);
    const ConfirmOutcome outcome =
        confirm_postcondition(m, plan.task_node, Verdict::reject({region}), fixtures().rules);
    if (!outcome.rework) {
      check.require(false, region + ": no rework plan");
      continue;
    }
    const auto& cmds = outcome.rework->commands;
    check.require(cmds.size() == 2, region + ": " + std::to_string(cmds.size()) + " commands");
    check.require(cmds.size() == 2 && cmds[0].kind == CommandKind::execute_step &&
                      cmds[0].payload["parameters"]["grit"] == finest && cmds[0].payload["region"] == region,
                  region + ": first command is not the finest-grit step for the region");
    check.require(cmds.size() == 2 && cmds[1].kind == CommandKind::operator_check, region + ": no operator_check");
    check.require(without_provenance(plan_to_json(*outcome.rework)) ==
                      expected_rework(fixtures().basin, structure, triplet, {region}),
                  region + ": differs from the rework oracle");
  }
  return check.result("each basin region reworks with grit " + std::to_string(finest) +
                      " plus one operator_check, equal to the rework oracle");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Result()>>> criteria{
      {"basin-end-to-end", basin_end_to_end},
      {"connector-fixture", connector_fixture},
      {"oracle-equivalence", oracle_equivalence},
      {"determinism", determinism},
      {"invariants", invariants},
      {"explanation-completeness", explanation_completeness},
      {"combinations", combinations},
      {"cli-service-parity", parity},
      {"rework", rework},
  };
  int failed = 0;
  for (const auto& [name, criterion] : criteria) {
    Result result;
    try {
      result = criterion();
    } catch (const std::exception& e) {
      result = {false, std::string("threw: ") + e.what()};
    }
    failed += result.pass ? 0 : 1;
    std::cout << (result.pass ? "PASS " : "FAIL ") << name << ": " << result.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
