// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "ccu/execution.hpp"
#include "ccu/planner.hpp"
#include "json.hpp"

namespace ccu {

using TripletOption = TaskTriplet;

/// Every (process, material, object) with an object of that material in the
/// workspace, a tool offering the process and matching instructions; sorted.
std::vector<TripletOption> valid_combinations(const Workspace& workspace,
                                              const BuildInstructionSet& instructions);

nlohmann::json triplet_to_json(const TaskTriplet& triplet);

struct FeedEvent {
  std::int64_t cursor = 0;
  std::string task_id;
  std::optional<TaskStatus> status;         // lifecycle event
  std::optional<ExecutionEvent> execution;  // robot event
  int plan_index = 0;
};

nlohmann::json feed_event_to_json(const FeedEvent& event);
FeedEvent feed_event_from_json(const nlohmann::json& json);

/// Ordered, append-only event feed with monotone cursors (1-based; cursor 0
/// means "from the beginning"). Optionally mirrored to an NDJSON file.
class EventFeed {
 public:
  EventFeed() = default;
  EventFeed(const EventFeed&) = delete;
  EventFeed& operator=(const EventFeed&) = delete;

  /// Replaces the history (used when reloading a data directory).
  void restore(std::vector<FeedEvent> events);
  void attach_log(const std::filesystem::path& path);
  std::int64_t publish(FeedEvent event);
  std::int64_t head() const;
  /// Events with cursor > since. Throws InvalidCursor if since is negative or past the head.
  std::vector<FeedEvent> read(std::int64_t since) const;
  /// Like read(), but waits up to `timeout` for something new.
  std::vector<FeedEvent> wait(std::int64_t since, std::chrono::milliseconds timeout) const;
  void close();

 private:
  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::vector<FeedEvent> events_;
  std::ofstream log_;
  bool closed_ = false;
};

struct TaskRecord {
  std::string id;
  TaskTriplet triplet;
  TaskStatus status = TaskStatus::submitted;
  std::vector<TaskStatus> history;
  /// Index 0 is the decomposition; later entries are rework plans.
  std::vector<nlohmann::json> plans;
  std::vector<nlohmann::json> traces;
  std::vector<nlohmann::json> explanations;
  std::vector<std::string> event_logs;  // NDJSON per plan
  std::string error;
  std::int64_t created_ms = 0;
  std::int64_t updated_ms = 0;
};

nlohmann::json record_to_json(const TaskRecord& record);
TaskRecord record_from_json(const nlohmann::json& json);
/// Public view used by GET /tasks/{id}.
nlohmann::json record_summary(const TaskRecord& record);

struct OrchestratorConfig {
  std::string scenario_path;
  std::string instructions_path;
  std::string rules_path;
  double time_compression = 0.0;
  /// Sleep through simulated durations (interactive service).
  bool real_time = false;
  std::optional<std::filesystem::path> data_dir;
  int max_cycles = kDefaultMaxCycles;
  /// Test hook: the simulated robot faults when it reaches this seq.
  std::optional<int> fault_at_seq;
};

/// The CCU service: owns working memory, the simulated robot and the event
/// feed. API calls may come from any thread. Memory is only touched by the
/// deliberation agent, which serializes requests through its mailbox; the
/// executor is a second agent consuming one plan at a time. Tasks are queued
/// FIFO because there is one robot.
class Orchestrator {
 public:
  explicit Orchestrator(OrchestratorConfig config);
  Orchestrator(OrchestratorConfig config, Workspace workspace, BuildInstructionSet instructions,
               Ruleset ruleset);
  ~Orchestrator();
  Orchestrator(const Orchestrator&) = delete;
  Orchestrator& operator=(const Orchestrator&) = delete;

  /// Starts both agents; the constructor already does this.
  void start();
  void stop();

  const Workspace& workspace() const noexcept { return workspace_; }
  const BuildInstructionSet& instructions() const noexcept { return instructions_; }
  const Ruleset& ruleset() const noexcept { return ruleset_; }

  nlohmann::json workspace_status();
  std::vector<TripletOption> combinations() const;

  /// Validates synchronously (throws validation errors); planning and
  /// execution continue asynchronously.
  std::string submit_task(const TaskTriplet& triplet);

  TaskRecord get_task(const std::string& id) const;
  std::vector<TaskRecord> list_tasks() const;
  /// Serialized plan; index 0 is the decomposition, later ones rework plans.
  std::string get_plan(const std::string& id, std::size_t index = 0) const;
  nlohmann::json get_explanation(const std::string& id) const;

  TaskStatus confirm(const std::string& id, const Verdict& verdict);
  TaskStatus request_rework(const std::string& id, const std::vector<std::string>& regions);

  std::vector<FeedEvent> stream_events(std::int64_t since) const { return feed_.read(since); }
  std::vector<FeedEvent> wait_events(std::int64_t since, std::chrono::milliseconds timeout) const {
    return feed_.wait(since, timeout);
  }
  std::int64_t event_head() const { return feed_.head(); }

  /// Test helper: waits until the task reaches `status` (or a terminal one).
  TaskRecord wait_for_status(const std::string& id, TaskStatus status,
                             std::chrono::milliseconds timeout = std::chrono::seconds(10)) const;
  /// Test helper: waits until no task is active or queued.
  bool wait_idle(std::chrono::milliseconds timeout = std::chrono::seconds(10)) const;

 private:
  struct Gate {
    std::mutex mutex;
    std::condition_variable cv;
    bool released = false;
    bool cancelled = false;
  };
  struct ExecJob {
    std::string task_id;
    int plan_index = 0;
    CommandPlan plan;
  };

  template <typename T>
  T call(std::function<T()> job);
  void post(std::function<void()> job);

  void deliberation_loop();
  void executor_loop();

  // Deliberation-thread only.
  void pump();
  void start_task(const std::string& id);
  void on_waiting_operator(const std::string& id);
  void on_plan_finished(const std::string& id, int plan_index, const ExecutionLog& log,
                        const std::string& mounted);
  // Records a status change and publishes it. With sync_memory the task node
  // follows as well; start_task replays steps the rules already took.
  void transition(const std::string& id, TaskStatus status, int plan_index, bool sync_memory = true);
  void fail_task(const std::string& id, const std::string& reason);
  void dispatch(const std::string& id, int plan_index, CommandPlan plan);

  void persist(const TaskRecord& record);
  void load_persisted();
  std::shared_ptr<Gate> gate_for(const std::string& id);

  OrchestratorConfig config_;
  Workspace workspace_;
  BuildInstructionSet instructions_;
  Ruleset ruleset_;
  PlannerOptions planner_options_;

  // Owned by the deliberation agent.
  WorkingMemory memory_;
  std::map<std::string, NodeId> task_nodes_;
  std::deque<std::string> fifo_;
  std::optional<std::string> active_;
  std::map<std::string, CommandPlan> pending_rework_;
  // Accepted tasks whose final operator check is still finishing on the robot.
  std::set<std::string> pending_done_;

  // Owned by the executor agent.
  RobotState robot_;
  LogicalClock clock_;

  mutable std::mutex records_mutex_;
  mutable std::condition_variable records_changed_;
  std::map<std::string, TaskRecord> records_;
  int next_task_number_ = 1;
  bool idle_ = true;

  std::mutex gates_mutex_;
  std::map<std::string, std::shared_ptr<Gate>> gates_;

  EventFeed feed_;

  std::mutex mailbox_mutex_;
  std::condition_variable mailbox_cv_;
  std::deque<std::function<void()>> mailbox_;

  std::mutex exec_mutex_;
  std::condition_variable exec_cv_;
  std::deque<ExecJob> exec_queue_;

  std::atomic<bool> running_{false};
  std::atomic<std::int64_t> deliberation_beat_{0};
  std::atomic<std::int64_t> executor_beat_{0};
  std::thread deliberation_;
  std::thread executor_;
};

}  // namespace ccu
