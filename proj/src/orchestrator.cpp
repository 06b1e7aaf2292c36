// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#include "ccu/orchestrator.hpp"

#include <algorithm>
#include <cstdio>
#include <future>
#include <set>
#include <sstream>

#include "ccu/error.hpp"

namespace ccu {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr auto kHeartbeatPeriod = std::chrono::milliseconds(200);

std::int64_t wall_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string format_task_id(int number) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "task-%04d", number);
  return buffer;
}

std::optional<int> task_number(const std::string& id) {
  if (id.rfind("task-", 0) != 0) {
    return std::nullopt;
  }
  try {
    return std::stoi(id.substr(5));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void write_atomically(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::BadRequest, "cannot write " + tmp.string());
    }
    out << text;
  }
  fs::rename(tmp, path);
}

TaskStatus status_of(const json& j) {
  auto status = parse_status(j.get<std::string>());
  if (!status) {
    throw Error(ErrorCode::ParseError, "unknown status '" + j.get<std::string>() + "'");
  }
  return *status;
}

}  // namespace

std::vector<TripletOption> valid_combinations(const Workspace& workspace,
                                              const BuildInstructionSet& instructions) {
  std::set<TripletOption> options;
  for (const auto& object : workspace.objects) {
    for (const auto& tool : workspace.tools) {
      for (const auto& process : tool.processes) {
        if (instructions.find(object.name, object.material, process) != nullptr) {
          options.insert(TaskTriplet{process, object.material, object.name});
        }
      }
    }
  }
  return {options.begin(), options.end()};
}

json triplet_to_json(const TaskTriplet& triplet) {
  return {{"process", triplet.process}, {"material", triplet.material}, {"object", triplet.object}};
}

json feed_event_to_json(const FeedEvent& event) {
  json j = {{"cursor", event.cursor}, {"task", event.task_id}, {"plan", event.plan_index}};
  if (event.status) {
    j["type"] = "status";
    j["status"] = std::string(to_string(*event.status));
  } else if (event.execution) {
    j["type"] = "execution";
    j["event"] = event_to_json(*event.execution);
  }
  return j;
}

FeedEvent feed_event_from_json(const json& j) {
  FeedEvent event;
  event.cursor = j.at("cursor").get<std::int64_t>();
  event.task_id = j.at("task").get<std::string>();
  event.plan_index = j.value("plan", 0);
  const std::string type = j.at("type").get<std::string>();
  if (type == "status") {
    event.status = status_of(j.at("status"));
  } else if (type == "execution") {
    event.execution = event_from_json(j.at("event"));
  } else {
    throw Error(ErrorCode::ParseError, "unknown feed event type '" + type + "'");
  }
  return event;
}

// --- EventFeed ---------------------------------------------------------------

void EventFeed::restore(std::vector<FeedEvent> events) {
  std::lock_guard lock(mutex_);
  events_ = std::move(events);
  for (std::size_t i = 0; i < events_.size(); ++i) {
    events_[i].cursor = static_cast<std::int64_t>(i) + 1;
  }
}

void EventFeed::attach_log(const fs::path& path) {
  std::lock_guard lock(mutex_);
  log_.open(path, std::ios::binary | std::ios::app);
  if (!log_) {
    throw Error(ErrorCode::BadRequest, "cannot open event log " + path.string());
  }
}

std::int64_t EventFeed::publish(FeedEvent event) {
  std::int64_t cursor = 0;
  {
    std::lock_guard lock(mutex_);
    cursor = static_cast<std::int64_t>(events_.size()) + 1;
    event.cursor = cursor;
    if (log_.is_open()) {
      log_ << feed_event_to_json(event).dump() << '\n';
      log_.flush();
    }
    events_.push_back(std::move(event));
  }
  changed_.notify_all();
  return cursor;
}

std::int64_t EventFeed::head() const {
  std::lock_guard lock(mutex_);
  return static_cast<std::int64_t>(events_.size());
}

std::vector<FeedEvent> EventFeed::read(std::int64_t since) const {
  std::lock_guard lock(mutex_);
  const auto head = static_cast<std::int64_t>(events_.size());
  if (since < 0 || since > head) {
    throw Error(ErrorCode::InvalidCursor,
                "cursor " + std::to_string(since) + " outside [0, " + std::to_string(head) + "]");
  }
  return {events_.begin() + since, events_.end()};
}

std::vector<FeedEvent> EventFeed::wait(std::int64_t since, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  const auto head = static_cast<std::int64_t>(events_.size());
  if (since < 0 || since > head) {
    throw Error(ErrorCode::InvalidCursor,
                "cursor " + std::to_string(since) + " outside [0, " + std::to_string(head) + "]");
  }
  changed_.wait_for(lock, timeout, [&] {
    return closed_ || static_cast<std::int64_t>(events_.size()) > since;
  });
  return {events_.begin() + since, events_.end()};
}

void EventFeed::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  changed_.notify_all();
}

// --- TaskRecord --------------------------------------------------------------

json record_to_json(const TaskRecord& record) {
  json history = json::array();
  for (auto status : record.history) {
    history.push_back(std::string(to_string(status)));
  }
  return {{"id", record.id},
          {"triplet", triplet_to_json(record.triplet)},
          {"status", std::string(to_string(record.status))},
          {"history", history},
          {"plans", record.plans},
          {"traces", record.traces},
          {"explanations", record.explanations},
          {"event_logs", record.event_logs},
          {"error", record.error},
          {"created", record.created_ms},
          {"updated", record.updated_ms}};
}

TaskRecord record_from_json(const json& j) {
  TaskRecord record;
  record.id = j.at("id").get<std::string>();
  const json& triplet = j.at("triplet");
  record.triplet = {triplet.at("process").get<std::string>(), triplet.at("material").get<std::string>(),
                    triplet.at("object").get<std::string>()};
  record.status = status_of(j.at("status"));
  for (const auto& status : j.at("history")) {
    record.history.push_back(status_of(status));
  }
  record.plans = j.at("plans").get<std::vector<json>>();
  record.traces = j.at("traces").get<std::vector<json>>();
  record.explanations = j.at("explanations").get<std::vector<json>>();
  record.event_logs = j.at("event_logs").get<std::vector<std::string>>();
  record.error = j.value("error", std::string());
  record.created_ms = j.at("created").get<std::int64_t>();
  record.updated_ms = j.at("updated").get<std::int64_t>();
  return record;
}

json record_summary(const TaskRecord& record) {
  json history = json::array();
  for (auto status : record.history) {
    history.push_back(std::string(to_string(status)));
  }
  json plans = json::array();
  for (std::size_t i = 0; i < record.plans.size(); ++i) {
    json entry = {{"index", i},
                  {"rework", i > 0},
                  {"commands", record.plans[i].size()},
                  {"plan", "/tasks/" + record.id + "/plan?index=" + std::to_string(i)},
                  {"trace", "tasks/" + record.id + ".json#/traces/" + std::to_string(i)}};
    entry["event_log"] = i < record.event_logs.size()
                             ? json("tasks/" + record.id + ".json#/event_logs/" + std::to_string(i))
                             : json(nullptr);
    plans.push_back(std::move(entry));
  }
  json j = {{"id", record.id},
            {"triplet", triplet_to_json(record.triplet)},
            {"status", std::string(to_string(record.status))},
            {"history", history},
            {"plans", plans},
            {"created", record.created_ms},
            {"updated", record.updated_ms}};
  j["error"] = record.error.empty() ? json(nullptr) : json(record.error);
  return j;
}

// --- Orchestrator ------------------------------------------------------------

Orchestrator::Orchestrator(OrchestratorConfig config)
    : Orchestrator(config, load_scenario_file(config.scenario_path),
                   load_instructions_file(config.instructions_path), load_rules_file(config.rules_path)) {}

Orchestrator::Orchestrator(OrchestratorConfig config, Workspace workspace,
                           BuildInstructionSet instructions, Ruleset ruleset)
    : config_(std::move(config)),
      workspace_(std::move(workspace)),
      instructions_(std::move(instructions)),
      ruleset_(std::move(ruleset)),
      memory_(build_memory(workspace_)) {
  planner_options_.max_cycles = config_.max_cycles;
  if (const ToolSpec* mounted = workspace_.mounted_tool()) {
    robot_.mounted_tool = mounted->name;
  }
  robot_.fault_at_seq = config_.fault_at_seq;
  if (config_.data_dir) {
    load_persisted();
  }
  start();
}

Orchestrator::~Orchestrator() { stop(); }

void Orchestrator::start() {
  if (running_.exchange(true)) {
    return;
  }
  deliberation_beat_ = wall_ms();
  executor_beat_ = wall_ms();
  deliberation_ = std::thread([this] { deliberation_loop(); });
  executor_ = std::thread([this] { executor_loop(); });
}

void Orchestrator::stop() {
  if (!running_.exchange(false)) {
    return;
  }
  {
    std::lock_guard lock(gates_mutex_);
    for (auto& [id, gate] : gates_) {
      std::lock_guard gate_lock(gate->mutex);
      gate->cancelled = true;
      gate->cv.notify_all();
    }
  }
  exec_cv_.notify_all();
  mailbox_cv_.notify_all();
  if (executor_.joinable()) {
    executor_.join();
  }
  if (deliberation_.joinable()) {
    deliberation_.join();
  }
  feed_.close();
}

void Orchestrator::post(std::function<void()> job) {
  {
    std::lock_guard lock(mailbox_mutex_);
    if (!running_) {
      return;
    }
    mailbox_.push_back(std::move(job));
  }
  mailbox_cv_.notify_one();
}

template <typename T>
T Orchestrator::call(std::function<T()> job) {
  auto promise = std::make_shared<std::promise<T>>();
  auto future = promise->get_future();
  {
    std::lock_guard lock(mailbox_mutex_);
    if (!running_) {
      throw Error(ErrorCode::BadRequest, "service is stopped");
    }
    mailbox_.push_back([promise, job = std::move(job)] {
      try {
        promise->set_value(job());
      } catch (...) {
        promise->set_exception(std::current_exception());
      }
    });
  }
  mailbox_cv_.notify_one();
  return future.get();
}

void Orchestrator::deliberation_loop() {
  deliberation_beat_ = wall_ms();
  for (;;) {
    std::function<void()> job;
    {
      std::unique_lock lock(mailbox_mutex_);
      mailbox_cv_.wait_for(lock, kHeartbeatPeriod, [&] { return !running_ || !mailbox_.empty(); });
      deliberation_beat_ = wall_ms();
      if (mailbox_.empty()) {
        if (!running_) {
          return;
        }
        continue;
      }
      job = std::move(mailbox_.front());
      mailbox_.pop_front();
    }
    job();
  }
}

void Orchestrator::executor_loop() {
  executor_beat_ = wall_ms();
  for (;;) {
    ExecJob job;
    {
      std::unique_lock lock(exec_mutex_);
      exec_cv_.wait_for(lock, kHeartbeatPeriod, [&] { return !running_ || !exec_queue_.empty(); });
      executor_beat_ = wall_ms();
      if (!running_) {
        return;
      }
      if (exec_queue_.empty()) {
        continue;
      }
      job = std::move(exec_queue_.front());
      exec_queue_.pop_front();
    }

    const std::string id = job.task_id;
    const int plan_index = job.plan_index;
    auto gate = gate_for(id);
    EventSink sink = [&](const ExecutionEvent& event) {
      executor_beat_ = wall_ms();
      feed_.publish(FeedEvent{0, id, std::nullopt, event, plan_index});
    };
    OperatorGate wait_for_operator = [&](const PlannedCommand&) {
      post([this, id] { on_waiting_operator(id); });
      std::unique_lock lock(gate->mutex);
      while (!gate->cv.wait_for(lock, kHeartbeatPeriod, [&] { return gate->released || gate->cancelled; })) {
        executor_beat_ = wall_ms();
      }
      const bool answered = gate->released;
      gate->released = false;
      return answered;
    };
    ExecutionLog log;
    try {
      log = execute_plan(job.plan, robot_, sink, wait_for_operator, clock_,
                         ExecutionOptions{config_.time_compression, config_.real_time});
    } catch (const std::exception& e) {
      log.failed = true;
      log.events.push_back(ExecutionEvent{clock_.now(), 0, Phase::failed, e.what(), 0.0});
    }
    if (log.awaiting_operator) {
      continue;  // cancelled by stop()
    }
    post([this, id, plan_index, log, mounted = robot_.mounted_tool] {
      on_plan_finished(id, plan_index, log, mounted);
    });
  }
}

std::shared_ptr<Orchestrator::Gate> Orchestrator::gate_for(const std::string& id) {
  std::lock_guard lock(gates_mutex_);
  auto& gate = gates_[id];
  if (!gate) {
    gate = std::make_shared<Gate>();
    gate->cancelled = !running_;
  }
  return gate;
}

void Orchestrator::persist(const TaskRecord& record) {
  if (!config_.data_dir) {
    return;
  }
  write_atomically(*config_.data_dir / "tasks" / (record.id + ".json"), record_to_json(record).dump(2));
}

void Orchestrator::load_persisted() {
  const fs::path root = *config_.data_dir;
  fs::create_directories(root / "tasks");
  std::vector<FeedEvent> events;
  if (std::ifstream in(root / "events.ndjson"); in) {
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) {
        events.push_back(feed_event_from_json(json::parse(line)));
      }
    }
  }
  feed_.restore(std::move(events));
  feed_.attach_log(root / "events.ndjson");

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(root / "tasks")) {
    if (entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file);
    std::stringstream buffer;
    buffer << in.rdbuf();
    TaskRecord record = record_from_json(json::parse(buffer.str()));
    if (auto number = task_number(record.id)) {
      next_task_number_ = std::max(next_task_number_, *number + 1);
    }
    if (!is_terminal(record.status)) {
      // The robot and working memory do not survive a restart.
      record.status = TaskStatus::failed;
      record.history.push_back(TaskStatus::failed);
      record.error = "interrupted by service restart";
      record.updated_ms = wall_ms();
      persist(record);
      feed_.publish(FeedEvent{0, record.id, TaskStatus::failed, std::nullopt,
                              static_cast<int>(record.plans.empty() ? 0 : record.plans.size() - 1)});
    }
    records_.emplace(record.id, std::move(record));
  }
}

json Orchestrator::workspace_status() {
  return call<json>([this] {
    const std::int64_t now = wall_ms();
    auto component = [&](std::int64_t beat) {
      return json{{"last_heartbeat", beat},
                  {"age_ms", now - beat},
                  {"alive", running_ && now - beat < 5 * kHeartbeatPeriod.count()}};
    };
    json queued = json::array();
    for (const auto& id : fifo_) {
      queued.push_back(id);
    }
    const auto mounted = mounted_tool_name(memory_);
    return json{{"workspace", scenario_to_json(workspace_)},
                {"mounted_tool", mounted ? json(*mounted) : json(nullptr)},
                {"active_task", active_ ? json(*active_) : json(nullptr)},
                {"queued_tasks", queued},
                {"memory_elements", memory_.size()},
                {"ruleset_rules", ruleset_.size()},
                {"event_head", feed_.head()},
                {"components",
                 {{"deliberation", component(deliberation_beat_)},
                  {"executor", component(executor_beat_)}}}};
  });
}

std::vector<TripletOption> Orchestrator::combinations() const {
  return valid_combinations(workspace_, instructions_);
}

std::string Orchestrator::submit_task(const TaskTriplet& triplet) {
  const ValidatedTask validated = validate_triplet(triplet, workspace_, instructions_);
  return call<std::string>([this, triplet = validated.triplet] {
    TaskRecord record;
    {
      std::lock_guard lock(records_mutex_);
      record.id = format_task_id(next_task_number_++);
      record.triplet = triplet;
      record.status = TaskStatus::submitted;
      record.history = {TaskStatus::submitted};
      record.created_ms = record.updated_ms = wall_ms();
      persist(record);
      records_[record.id] = record;
      idle_ = false;
    }
    feed_.publish(FeedEvent{0, record.id, TaskStatus::submitted, std::nullopt, 0});
    fifo_.push_back(record.id);
    pump();
    return record.id;
  });
}

TaskRecord Orchestrator::get_task(const std::string& id) const {
  std::lock_guard lock(records_mutex_);
  auto it = records_.find(id);
  if (it == records_.end()) {
    throw Error(ErrorCode::UnknownTask, "no task '" + id + "'");
  }
  return it->second;
}

std::vector<TaskRecord> Orchestrator::list_tasks() const {
  std::lock_guard lock(records_mutex_);
  std::vector<TaskRecord> out;
  for (const auto& [id, record] : records_) {
    out.push_back(record);
  }
  return out;
}

std::string Orchestrator::get_plan(const std::string& id, std::size_t index) const {
  const TaskRecord record = get_task(id);
  if (index >= record.plans.size()) {
    throw Error(ErrorCode::NotFound, "task '" + id + "' has no plan " + std::to_string(index));
  }
  return record.plans[index].dump();
}

json Orchestrator::get_explanation(const std::string& id) const {
  const TaskRecord record = get_task(id);
  json rework = json::array();
  for (std::size_t i = 1; i < record.explanations.size(); ++i) {
    rework.push_back(record.explanations[i]);
  }
  return {{"task", record.id},
          {"triplet", triplet_to_json(record.triplet)},
          {"status", std::string(to_string(record.status))},
          {"entries", record.explanations.empty() ? json::array() : record.explanations[0]},
          {"rework", rework},
          {"truncated", !record.traces.empty() && record.traces[0].value("truncated", false)}};
}

TaskStatus Orchestrator::confirm(const std::string& id, const Verdict& verdict) {
  return call<TaskStatus>([this, id, verdict] {
    const TaskRecord record = get_task(id);
    auto node = task_nodes_.find(id);
    if (record.status != TaskStatus::awaiting_confirmation || node == task_nodes_.end() ||
        pending_done_.count(id) > 0) {
      throw Error(ErrorCode::WrongStatus, "task '" + id + "' is " +
                                              std::string(to_string(record.status)) +
                                              ", not awaiting_confirmation");
    }
    ConfirmOutcome outcome =
        confirm_postcondition(memory_, node->second, verdict, ruleset_, planner_options_);
    int plan_index = static_cast<int>(record.plans.size()) - 1;
    if (outcome.rework) {
      std::lock_guard lock(records_mutex_);
      TaskRecord& stored = records_.at(id);
      stored.plans.push_back(plan_to_json(*outcome.rework));
      stored.traces.push_back(trace_to_json(outcome.rework->trace));
      stored.explanations.push_back(explain_plan(*outcome.rework));
      plan_index = static_cast<int>(stored.plans.size()) - 1;
      pending_rework_[id] = std::move(*outcome.rework);
    }
    if (outcome.status == TaskStatus::done) {
      // Reported once the executor has finished the operator check.
      pending_done_.insert(id);
    } else {
      transition(id, outcome.status, plan_index);
    }
    auto gate = gate_for(id);
    {
      std::lock_guard lock(gate->mutex);
      gate->released = true;
    }
    gate->cv.notify_all();
    return outcome.status;
  });
}

TaskStatus Orchestrator::request_rework(const std::string& id, const std::vector<std::string>& regions) {
  return confirm(id, Verdict::reject(regions));
}

TaskRecord Orchestrator::wait_for_status(const std::string& id, TaskStatus status,
                                         std::chrono::milliseconds timeout) const {
  std::unique_lock lock(records_mutex_);
  records_changed_.wait_for(lock, timeout, [&] {
    auto it = records_.find(id);
    return it != records_.end() && (it->second.status == status || is_terminal(it->second.status));
  });
  auto it = records_.find(id);
  if (it == records_.end()) {
    throw Error(ErrorCode::UnknownTask, "no task '" + id + "'");
  }
  return it->second;
}

bool Orchestrator::wait_idle(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(records_mutex_);
  return records_changed_.wait_for(lock, timeout, [&] { return idle_; });
}

// Deliberation agent ----------------------------------------------------------

void Orchestrator::transition(const std::string& id, TaskStatus status, int plan_index, bool sync_memory) {
  if (auto node = task_nodes_.find(id); sync_memory && node != task_nodes_.end() && memory_.contains(node->second)) {
    if (task_status(memory_, node->second) != status) {
      set_task_status(memory_, node->second, status);
    }
  }
  {
    std::lock_guard lock(records_mutex_);
    TaskRecord& record = records_.at(id);
    record.status = status;
    record.history.push_back(status);
    record.updated_ms = wall_ms();
    persist(record);
    // Published under the lock so a woken waiter always finds the event.
    feed_.publish(FeedEvent{0, id, status, std::nullopt, plan_index});
  }
  records_changed_.notify_all();
}

void Orchestrator::fail_task(const std::string& id, const std::string& reason) {
  {
    std::lock_guard lock(records_mutex_);
    records_.at(id).error = reason;
  }
  const TaskTriplet triplet = get_task(id).triplet;
  if (auto node = find_task(memory_, triplet.object)) {
    if (!is_terminal(task_status(memory_, *node))) {
      set_task_status(memory_, *node, TaskStatus::failed);
    }
  }
  const TaskRecord record = get_task(id);
  transition(id, TaskStatus::failed, record.plans.empty() ? 0 : static_cast<int>(record.plans.size()) - 1);
  pending_rework_.erase(id);
  pending_done_.erase(id);
  if (active_ == id) {
    active_.reset();
  }
}

void Orchestrator::pump() {
  while (!active_ && !fifo_.empty()) {
    const std::string id = fifo_.front();
    fifo_.pop_front();
    active_ = id;
    start_task(id);
  }
  {
    std::lock_guard lock(records_mutex_);
    idle_ = !active_ && fifo_.empty();
  }
  records_changed_.notify_all();
}

void Orchestrator::start_task(const std::string& id) {
  const TaskRecord record = get_task(id);
  CommandPlan plan;
  try {
    const ValidatedTask validated = validate_triplet(record.triplet, workspace_, instructions_);
    plan = decompose(validated, memory_, ruleset_, planner_options_);
  } catch (const Error& e) {
    fail_task(id, std::string(e.code_name()) + ": " + e.what());
    return;
  }
  task_nodes_[id] = plan.task_node;
  {
    std::lock_guard lock(records_mutex_);
    TaskRecord& stored = records_.at(id);
    stored.plans = {plan_to_json(plan)};
    stored.traces = {trace_to_json(plan.trace)};
    stored.explanations = {explain_plan(plan)};
  }
  // The rules already moved the node through these; the record follows.
  transition(id, TaskStatus::matched, 0, false);
  transition(id, TaskStatus::planned, 0, false);
  transition(id, TaskStatus::executing, 0);
  dispatch(id, 0, std::move(plan));
}

void Orchestrator::dispatch(const std::string& id, int plan_index, CommandPlan plan) {
  {
    std::lock_guard lock(exec_mutex_);
    exec_queue_.push_back(ExecJob{id, plan_index, std::move(plan)});
  }
  exec_cv_.notify_one();
}

void Orchestrator::on_waiting_operator(const std::string& id) {
  const TaskRecord record = get_task(id);
  if (record.status == TaskStatus::executing || record.status == TaskStatus::reworking) {
    transition(id, TaskStatus::awaiting_confirmation, static_cast<int>(record.plans.size()) - 1);
  }
}

void Orchestrator::on_plan_finished(const std::string& id, int plan_index, const ExecutionLog& log,
                                    const std::string& mounted) {
  if (mounted_tool_name(memory_) != mounted && !mounted.empty()) {
    set_mounted_tool(memory_, mounted);
  }
  {
    std::lock_guard lock(records_mutex_);
    TaskRecord& record = records_.at(id);
    if (record.event_logs.size() <= static_cast<std::size_t>(plan_index)) {
      record.event_logs.resize(plan_index + 1);
    }
    record.event_logs[plan_index] = serialize_event_log(log);
    persist(record);
  }
  if (pending_done_.erase(id) > 0 && !log.failed) {
    transition(id, TaskStatus::done, plan_index);
  }
  if (log.failed) {
    fail_task(id, "execution failed at seq " + std::to_string(log.failed_seq.value_or(0)));
    pump();
    return;
  }
  const TaskRecord record = get_task(id);
  if (record.status == TaskStatus::reworking) {
    auto pending = pending_rework_.find(id);
    if (pending != pending_rework_.end()) {
      CommandPlan plan = std::move(pending->second);
      pending_rework_.erase(pending);
      dispatch(id, static_cast<int>(record.plans.size()) - 1, std::move(plan));
      return;
    }
  }
  if (is_terminal(record.status)) {
    if (active_ == id) {
      active_.reset();
    }
    pump();
  }
}

}  // namespace ccu
