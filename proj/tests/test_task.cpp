// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#include <catch2/catch_amalgamated.hpp>

#include "ccu/error.hpp"
#include "ccu/task.hpp"
#include "ccu/workspace.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace ccu;
using namespace ccu::testing;

namespace {

ErrorCode triplet_error(std::string_view text) {
  try {
    parse_triplet(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("triplet was accepted: " << text);
  return ErrorCode::BadRequest;
}

const std::vector<TaskStatus> kAll = {
    TaskStatus::submitted, TaskStatus::matched,   TaskStatus::planned, TaskStatus::executing,
    TaskStatus::awaiting_confirmation, TaskStatus::reworking, TaskStatus::done, TaskStatus::failed};

}  // namespace

TEST_CASE("triplets parse in either separator style", "[task]") {
  const TaskTriplet expected{"sand", "mineral cast", "basin"};
  CHECK(parse_triplet("sand - mineral cast - basin") == expected);
  CHECK(parse_triplet("Sand, Mineral  Cast, BASIN") == expected);
  CHECK(parse_triplet(std::map<std::string, std::string>{
            {"object", "basin"}, {"process", "sand"}, {"material", "mineral cast"}}) == expected);
  CHECK(expected.to_string() == "sand - mineral cast - basin");
  // commas take precedence so hyphenated labels survive
  CHECK(parse_triplet("screw, die-cast aluminum, connector").material == "die-cast aluminum");
}

TEST_CASE("bad triplets are classified", "[task]") {
  CHECK(triplet_error("") == ErrorCode::EmptyInput);
  CHECK(triplet_error("   ") == ErrorCode::EmptyInput);
  CHECK(triplet_error("sand") == ErrorCode::MissingField);
  CHECK(triplet_error("sand - - basin") == ErrorCode::MissingField);
  CHECK(triplet_error("a - b - c - d") == ErrorCode::MalformedTriplet);
  CHECK_THROWS_AS(parse_triplet(std::map<std::string, std::string>{{"tool", "x"}}), Error);
  CHECK_THROWS_AS(parse_triplet(std::map<std::string, std::string>{}), Error);
}

TEST_CASE("triplet text round-trips", "[task][property]") {
  Rng rng(3);
  for (int round = 0; round < 500; ++round) {
    const TaskTriplet t{pick(rng, process_pool()), pick(rng, material_pool()), pick(rng, object_pool())};
    REQUIRE(parse_triplet(t.to_string()) == t);
  }
}

TEST_CASE("status names round-trip", "[task]") {
  for (auto s : kAll) {
    CHECK(parse_status(to_string(s)) == s);
  }
  CHECK_FALSE(parse_status("paused").has_value());
}

TEST_CASE("transition table", "[task]") {
  // The allowed edges, written out independently of the implementation.
  using S = TaskStatus;
  const std::set<std::pair<S, S>> allowed = {
      {S::submitted, S::matched},
      {S::matched, S::planned},
      {S::planned, S::executing},
      {S::executing, S::awaiting_confirmation},
      {S::awaiting_confirmation, S::done},
      {S::awaiting_confirmation, S::reworking},
      {S::reworking, S::awaiting_confirmation},
      {S::submitted, S::failed},
      {S::matched, S::failed},
      {S::planned, S::failed},
      {S::executing, S::failed},
      {S::awaiting_confirmation, S::failed},
      {S::reworking, S::failed},
  };
  for (auto from : kAll) {
    for (auto to : kAll) {
      INFO(to_string(from) << " -> " << to_string(to));
      CHECK(is_allowed_transition(from, to) == allowed.contains({from, to}));
    }
  }
  CHECK(is_terminal(S::done));
  CHECK(is_terminal(S::failed));
  CHECK_FALSE(is_terminal(S::reworking));
}

TEST_CASE("task nodes carry status in memory", "[task]") {
  WorkingMemory m = build_memory(fixtures().basin);
  const NodeId task = allocate_task(m, *find_object(m, "basin"), parse_triplet("sand, mineral cast, basin"));
  CHECK(task_status(m, task) == TaskStatus::submitted);
  CHECK(task_triplet(m, task) == TaskTriplet{"sand", "mineral cast", "basin"});
  set_task_status(m, task, TaskStatus::matched);
  CHECK(task_status(m, task) == TaskStatus::matched);
  CHECK(m.values_of(task, "status").size() == 1);
  try {
    set_task_status(m, task, TaskStatus::done);
    FAIL("expected IllegalTransition");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IllegalTransition);
  }
  CHECK(task_status(m, task) == TaskStatus::matched);
  set_task_status(m, task, TaskStatus::failed);
  CHECK(task_status(m, task) == TaskStatus::failed);
  CHECK_THROWS_AS(task_status(m, *find_object(m, "basin")), Error);
}
