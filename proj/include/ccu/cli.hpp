// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ccu/engine.hpp"

namespace ccu::cli {

enum class OutputFormat { human, json };

namespace exit_code {
constexpr int ok = 0;
constexpr int validation = 2;
constexpr int planning = 3;
constexpr int execution = 4;
constexpr int unconfirmed = 5;  // no operator verdict (stdin closed)
constexpr int usage = 64;
constexpr int bad_document = 65;  // scenario, instructions or rules unreadable
}  // namespace exit_code

struct RunConfig {
  std::string scenario_path;
  std::string instructions_path;
  std::string rules_path;
  std::string triplet;
  OutputFormat format = OutputFormat::human;
  /// Scales simulated durations on the logical clock; the CLI never sleeps.
  double time_compression = 1.0;
  bool auto_confirm = false;
  /// Reject these regions on the first check, then accept.
  std::vector<std::string> reject_regions;
  /// Also write the exact plan serialization here.
  std::optional<std::string> plan_out;
  std::optional<int> fault_at_seq;
  int max_cycles = kDefaultMaxCycles;
};

/// The in-process pipeline: load, validate, decompose, execute, confirm.
/// Without auto-confirm or rejections the verdict is read from `in` as
/// `accept` or `reject <region>[, <region>...]`.
int run(const RunConfig& config, std::istream& in, std::ostream& out, std::ostream& err);

/// Command-line entry: `ccu run ...` and `ccu serve ...`.
int main(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace ccu::cli
