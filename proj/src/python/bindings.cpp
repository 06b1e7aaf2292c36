// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ccu/cli.hpp"
#include "ccu/error.hpp"
#include "ccu/orchestrator.hpp"
#include "ccu/planner.hpp"

namespace py = pybind11;

namespace {

// Scenario, instructions and rules loaded once; each call plans on a fresh memory.
class Planner {
 public:
  Planner(const std::string& scenario, const std::string& instructions, const std::string& rules)
      : workspace_(ccu::load_scenario_file(scenario)),
        instructions_(ccu::load_instructions_file(instructions)),
        ruleset_(ccu::load_rules_file(rules)) {}

  std::vector<std::tuple<std::string, std::string, std::string>> combinations() const {
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (const auto& t : ccu::valid_combinations(workspace_, instructions_)) {
      out.emplace_back(t.process, t.material, t.object);
    }
    return out;
  }

  void validate(const std::string& triplet) const {
    ccu::validate_triplet(ccu::parse_triplet(triplet), workspace_, instructions_);
  }

  std::pair<std::string, std::string> plan(const std::string& triplet) const {
    const ccu::CommandPlan plan = decompose(triplet);
    return {ccu::serialize_plan(plan), ccu::serialize_trace(plan.trace)};
  }

  std::string explain(const std::string& triplet) const {
    return ccu::explain_plan(decompose(triplet)).dump();
  }

  std::string rework(const std::string& triplet, const std::vector<std::string>& regions) const {
    ccu::WorkingMemory memory = ccu::build_memory(workspace_);
    const ccu::CommandPlan plan = ccu::decompose(
        ccu::validate_triplet(ccu::parse_triplet(triplet), workspace_, instructions_), memory, ruleset_);
    ccu::set_task_status(memory, plan.task_node, ccu::TaskStatus::executing);
    ccu::set_task_status(memory, plan.task_node, ccu::TaskStatus::awaiting_confirmation);
    return ccu::serialize_plan(ccu::plan_rework(memory, plan.task_node, regions, ruleset_));
  }

  std::string snapshot() const { return ccu::snapshot(ccu::build_memory(workspace_)); }

 private:
  ccu::CommandPlan decompose(const std::string& triplet) const {
    ccu::WorkingMemory memory = ccu::build_memory(workspace_);
    return ccu::decompose(ccu::validate_triplet(ccu::parse_triplet(triplet), workspace_, instructions_),
                          memory, ruleset_);
  }

  ccu::Workspace workspace_;
  ccu::BuildInstructionSet instructions_;
  ccu::Ruleset ruleset_;
};

py::tuple run_cli(const std::vector<std::string>& args, const std::string& stdin_text) {
  std::vector<const char*> argv{"ccu"};
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  std::istringstream in(stdin_text);
  std::ostringstream out;
  std::ostringstream err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = ccu::cli::main(static_cast<int>(argv.size()), argv.data(), in, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_ccu, m) {
  m.doc() = "Cognitive control unit: triplet validation, rule-driven decomposition and plan execution.";

  static py::exception<ccu::Error> error_type(m, "CcuError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) {
        std::rethrow_exception(p);
      }
    } catch (const ccu::Error& e) {
      py::object instance = py::handle(error_type.ptr())(e.what());
      instance.attr("code") = std::string(e.code_name());
      py::set_error(error_type, instance);
    }
  });

  m.def(
      "parse_triplet",
      [](const std::string& text) {
        const ccu::TaskTriplet t = ccu::parse_triplet(text);
        return std::make_tuple(t.process, t.material, t.object);
      },
      py::arg("text"), "Parse 'process - material - object' into a normalized tuple.");

  py::class_<Planner>(m, "Planner")
      .def(py::init<const std::string&, const std::string&, const std::string&>(), py::arg("scenario"),
           py::arg("instructions"), py::arg("rules"))
      .def("combinations", &Planner::combinations)
      .def("validate", &Planner::validate, py::arg("triplet"))
      .def("plan", &Planner::plan, py::arg("triplet"), "Returns (plan_json, trace_json).")
      .def("explain", &Planner::explain, py::arg("triplet"))
      .def("rework", &Planner::rework, py::arg("triplet"), py::arg("regions"),
           "Plan, then reject `regions` at the operator check; returns the rework plan JSON.")
      .def("snapshot", &Planner::snapshot, "Canonical snapshot of the initial working memory.");

  m.def("run_cli", &run_cli, py::arg("args"), py::arg("stdin") = std::string(),
        "Run the ccu command line in-process; returns (exit_code, stdout, stderr).");
}
