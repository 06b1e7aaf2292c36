// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#include "ccu/cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ccu/error.hpp"
#include "ccu/execution.hpp"
#include "ccu/http_service.hpp"
#include "ccu/orchestrator.hpp"
#include "ccu/planner.hpp"
#include "json.hpp"

namespace ccu::cli {

using nlohmann::json;

namespace {

int exit_code_for(ErrorCode code) {
  if (is_validation_error(code) || code == ErrorCode::InvalidRegion) {
    return exit_code::validation;
  }
  if (code == ErrorCode::PlanningFailed) {
    return exit_code::planning;
  }
  return exit_code::execution;
}

void report(const Error& e, const RunConfig& config, std::ostream& out, std::ostream& err) {
  err << "error: " << e.code_name() << ": " << e.what() << '\n';
  if (config.format == OutputFormat::json) {
    out << json{{"error", {{"code", std::string(e.code_name())}, {"message", e.what()}}}}.dump(2) << '\n';
  }
}

std::string describe(const PlannedCommand& command) {
  const json& p = command.payload;
  switch (command.kind) {
    case CommandKind::check_end_effector: return "tool " + p.value("tool", std::string());
    case CommandKind::change_end_effector:
      return "mount " + p.value("tool", std::string()) + " (replaces " + p.value("replaces", std::string()) + ")";
    case CommandKind::execute_step: {
      std::string text = p.value("path", std::string()) + " #" + p.value("index", json()).dump() + " " +
                         p.value("process", std::string());
      const json parameters = p.value("parameters", json::object());
      for (const auto& [key, value] : parameters.items()) {
        text += " " + key + "=" + (value.is_string() ? value.get<std::string>() : value.dump());
      }
      if (p.contains("region") && p["region"].is_string()) {
        text += " region=" + p["region"].get<std::string>();
      }
      return text;
    }
    case CommandKind::operator_check: return p.value("prompt", std::string());
  }
  return {};
}

void print_plan(std::ostream& out, const CommandPlan& plan) {
  out << (plan.rework ? "rework plan" : "plan") << " (" << plan.commands.size() << " commands)\n";
  for (const auto& command : plan.commands) {
    out << std::setw(4) << command.seq << "  " << std::left << std::setw(20) << to_string(command.kind)
        << std::setw(14) << to_string(command.origin) << std::right << describe(command) << "  ["
        << command.provenance.rule << " @ " << command.provenance.cycle << "]\n";
  }
}

void print_events(std::ostream& out, const ExecutionLog& log) {
  for (const auto& event : log.events) {
    out << "  t=" << event.timestamp_ms << "ms  #" << event.seq << " " << to_string(event.phase);
    if (!event.detail.empty()) {
      out << "  " << event.detail;
    }
    out << '\n';
  }
}

json events_to_json(const ExecutionLog& log) {
  json events = json::array();
  for (const auto& event : log.events) {
    events.push_back(event_to_json(event));
  }
  return events;
}

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) {
    return {};
  }
  return text.substr(begin, text.find_last_not_of(" \t\r\n") - begin + 1);
}

// `accept` or `reject rim, bowl`. Returns nullopt at end of input.
std::optional<Verdict> read_verdict(std::istream& in, std::ostream& prompt) {
  std::string line;
  for (;;) {
    prompt << "verdict (accept | reject <region>[, <region>...]): " << std::flush;
    if (!std::getline(in, line)) {
      return std::nullopt;
    }
    line = trim(line);
    if (line == "accept") {
      return Verdict::accept();
    }
    if (line.rfind("reject", 0) == 0) {
      std::vector<std::string> regions;
      std::stringstream rest(line.substr(6));
      std::string region;
      while (std::getline(rest, region, ',')) {
        if (!trim(region).empty()) {
          regions.push_back(normalize_label(region));
        }
      }
      return Verdict::reject(std::move(regions));
    }
  }
}

}  // namespace

int run(const RunConfig& config, std::istream& in, std::ostream& out, std::ostream& err) {
  Workspace workspace;
  std::optional<BuildInstructionSet> instructions;
  std::optional<Ruleset> ruleset;
  try {
    workspace = load_scenario_file(config.scenario_path);
    instructions = load_instructions_file(config.instructions_path);
    ruleset = load_rules_file(config.rules_path);
  } catch (const Error& e) {
    report(e, config, out, err);
    return exit_code::bad_document;
  }

  const bool human = config.format == OutputFormat::human;
  WorkingMemory memory = build_memory(workspace);
  PlannerOptions options;
  options.max_cycles = config.max_cycles;

  CommandPlan plan;
  try {
    const ValidatedTask task = validate_triplet(parse_triplet(config.triplet), workspace, *instructions);
    plan = decompose(task, memory, *ruleset, options);
  } catch (const Error& e) {
    report(e, config, out, err);
    return exit_code_for(e.code());
  }
  if (!config.plan_out) {
  } else if (std::ofstream file(*config.plan_out, std::ios::binary); file) {
    file << serialize_plan(plan);
  } else {
    err << "error: cannot write " << *config.plan_out << '\n';
    return exit_code::usage;
  }
  if (human) {
    out << "task: " << plan.task.to_string() << '\n';
    print_plan(out, plan);
    out << "decision cycles: " << plan.trace.cycles.size() << " fired, "
        << (plan.trace.truncated() ? "truncated" : "quiescent") << '\n';
  }

  RobotState robot;
  robot.mounted_tool = mounted_tool_name(memory).value_or("");
  robot.fault_at_seq = config.fault_at_seq;
  LogicalClock clock;
  const ExecutionOptions exec_options{config.time_compression, false};
  int round = 0;
  std::optional<CommandPlan> rework;
  std::optional<Error> confirm_error;

  OperatorGate gate = [&](const PlannedCommand&) {
    set_task_status(memory, plan.task_node, TaskStatus::awaiting_confirmation);
    std::optional<Verdict> verdict;
    if (round == 0 && !config.reject_regions.empty()) {
      verdict = Verdict::reject(config.reject_regions);
    } else if (config.auto_confirm || !config.reject_regions.empty()) {
      verdict = Verdict::accept();
    } else {
      verdict = read_verdict(in, err);
    }
    ++round;
    if (!verdict) {
      return false;
    }
    try {
      ConfirmOutcome outcome = confirm_postcondition(memory, plan.task_node, *verdict, *ruleset, options);
      rework = std::move(outcome.rework);
    } catch (const Error& e) {
      confirm_error = e;
      return false;
    }
    return true;
  };

  set_task_status(memory, plan.task_node, TaskStatus::executing);
  json rework_json = json::array();
  std::vector<ExecutionLog> logs;
  logs.push_back(execute_plan(plan, robot, {}, gate, clock, exec_options));
  if (human) {
    out << "events\n";
    print_events(out, logs.back());
  }
  while (!logs.back().failed && !logs.back().awaiting_operator && rework) {
    CommandPlan current = std::move(*rework);
    rework.reset();
    if (human) {
      print_plan(out, current);
    }
    logs.push_back(execute_plan(current, robot, {}, gate, clock, exec_options));
    if (human) {
      out << "events\n";
      print_events(out, logs.back());
    }
    rework_json.push_back({{"plan", plan_to_json(current)},
                           {"trace", trace_to_json(current.trace)},
                           {"events", events_to_json(logs.back())}});
  }

  int code = exit_code::ok;
  if (logs.back().failed) {
    set_task_status(memory, plan.task_node, TaskStatus::failed);
    code = exit_code::execution;
  } else if (confirm_error) {
    code = exit_code_for(confirm_error->code());
  } else if (logs.back().awaiting_operator) {
    code = exit_code::unconfirmed;
  }
  const TaskStatus status = task_status(memory, plan.task_node);

  if (human) {
    if (confirm_error) {
      err << "error: " << confirm_error->code_name() << ": " << confirm_error->what() << '\n';
    }
    if (logs.back().failed) {
      err << "error: execution failed at seq " << logs.back().failed_seq.value_or(0) << '\n';
    }
    out << "status: " << to_string(status) << '\n';
  } else {
    json document = {{"task", {{"process", plan.task.process},
                                {"material", plan.task.material},
                                {"object", plan.task.object}}},
                     {"status", std::string(to_string(status))},
                     {"plan", plan_to_json(plan)},
                     {"trace", trace_to_json(plan.trace)},
                     {"events", events_to_json(logs.front())},
                     {"rework", rework_json}};
    if (confirm_error) {
      document["error"] = {{"code", std::string(confirm_error->code_name())},
                           {"message", confirm_error->what()}};
    }
    out << document.dump(2) << '\n';
  }
  return code;
}

namespace {

struct ServeConfig {
  OrchestratorConfig orchestrator;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir;
};

int serve(const ServeConfig& config, std::ostream& out, std::ostream& err) {
  // Block termination signals before any thread starts so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  OrchestratorConfig orchestrator_config = config.orchestrator;
  if (!config.data_dir.empty()) {
    orchestrator_config.data_dir = config.data_dir;
  }
  try {
    Orchestrator orchestrator(orchestrator_config);
    HttpService service(orchestrator);
    const int port = service.bind(config.host, config.port);
    service.start();
    out << "listening on http://" << config.host << ":" << port << std::endl;
    int received = 0;
    sigwait(&signals, &received);
    service.stop();
    orchestrator.stop();
  } catch (const Error& e) {
    err << "error: " << e.code_name() << ": " << e.what() << '\n';
    return exit_code::bad_document;
  }
  return exit_code::ok;
}

}  // namespace

int main(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cognitive control unit for triplet-driven cobot tasks"};
  app.require_subcommand(1);

  RunConfig run_config;
  std::string format = "human";
  int fault_at_seq = 0;
  ServeConfig serve_config;

  auto add_inputs = [](CLI::App* sub, std::string& scenario, std::string& instructions, std::string& rules) {
    sub->add_option("--scenario", scenario, "workspace scenario (JSON)")->envname("CCU_SCENARIO")->required();
    sub->add_option("--instructions", instructions, "build instruction set (JSON)")
        ->envname("CCU_INSTRUCTIONS")
        ->required();
    sub->add_option("--rules", rules, "decomposition ruleset")->envname("CCU_RULES")->required();
  };

  CLI::App* run_cmd = app.add_subcommand("run", "plan and execute one task in-process");
  add_inputs(run_cmd, run_config.scenario_path, run_config.instructions_path, run_config.rules_path);
  run_cmd->add_option("--triplet", run_config.triplet, "\"process - material - object\"")->required();
  run_cmd->add_option("--format", format, "human or json")->check(CLI::IsMember({"human", "json"}));
  run_cmd->add_option("--time-compression", run_config.time_compression, "simulated time factor")
      ->envname("CCU_TIME_COMPRESSION")
      ->check(CLI::NonNegativeNumber);
  run_cmd->add_flag("--auto-confirm", run_config.auto_confirm, "accept the operator check");
  run_cmd->add_option("--reject-region", run_config.reject_regions,
                      "reject this region once, then accept (repeatable)");
  run_cmd->add_option("--plan-out", run_config.plan_out, "write the plan serialization to a file");
  run_cmd->add_option("--fault-at-seq", fault_at_seq, "make the simulated robot fail at this command")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--max-cycles", run_config.max_cycles, "decision cycle limit")->check(CLI::PositiveNumber);

  CLI::App* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
  add_inputs(serve_cmd, serve_config.orchestrator.scenario_path, serve_config.orchestrator.instructions_path,
             serve_config.orchestrator.rules_path);
  serve_cmd->add_option("--host", serve_config.host, "listen address");
  serve_cmd->add_option("--port", serve_config.port, "listen port")->envname("CCU_PORT")->check(CLI::Range(0, 65535));
  serve_config.orchestrator.time_compression = 0.01;
  serve_config.orchestrator.real_time = true;
  serve_cmd->add_option("--time-compression", serve_config.orchestrator.time_compression, "simulated time factor")
      ->envname("CCU_TIME_COMPRESSION")
      ->check(CLI::NonNegativeNumber);
  serve_cmd->add_option("--data-dir", serve_config.data_dir, "event log and task records")->envname("CCU_DATA_DIR");

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) {
      args.emplace_back(argv[i]);
    }
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::ok : exit_code::usage;
  }

  if (run_cmd->parsed()) {
    run_config.format = format == "json" ? OutputFormat::json : OutputFormat::human;
    if (fault_at_seq > 0) {
      run_config.fault_at_seq = fault_at_seq;
    }
    return run(run_config, in, out, err);
  }
  return serve(serve_config, out, err);
}

}  // namespace ccu::cli
