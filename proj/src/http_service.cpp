// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#include "ccu/http_service.hpp"

#include "httplib.h"
#include "json.hpp"

namespace ccu {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

json parse_json(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BadRequest, std::string("body is not JSON: ") + e.what());
  }
}

json events_json(const std::vector<FeedEvent>& events) {
  json out = json::array();
  for (const auto& event : events) {
    out.push_back(feed_event_to_json(event));
  }
  return out;
}

std::int64_t parse_cursor(const std::string& text) {
  std::size_t used = 0;
  std::int64_t value = 0;
  try {
    value = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw Error(ErrorCode::InvalidCursor, "cursor '" + text + "' is not an integer");
  }
  return value;
}

std::string sse_frame(const FeedEvent& event) {
  return "id: " + std::to_string(event.cursor) + "\nevent: " + (event.status ? "status" : "execution") +
         "\ndata: " + feed_event_to_json(event).dump() + "\n\n";
}

// Wraps a handler so that library errors become `{code, message}` bodies.
template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const Error& e) {
      res.status = http_status(e.code());
      res.set_content(error_body(e), kJson);
    } catch (const json::exception& e) {
      const Error error(ErrorCode::BadRequest, e.what());
      res.status = 400;
      res.set_content(error_body(error), kJson);
    }
  };
}

}  // namespace

int http_status(ErrorCode code) {
  if (is_validation_error(code)) {
    return 422;
  }
  switch (code) {
    case ErrorCode::InvalidRegion: return 422;
    case ErrorCode::UnknownTask:
    case ErrorCode::NotFound: return 404;
    case ErrorCode::WrongStatus:
    case ErrorCode::IllegalTransition:
    case ErrorCode::RobotBusy: return 409;
    case ErrorCode::InvalidCursor:
    case ErrorCode::BadRequest:
    case ErrorCode::ParseError: return 400;
    default: return 500;
  }
}

std::string error_body(const Error& error) {
  return json{{"code", std::string(error.code_name())}, {"message", error.what()}}.dump();
}

TaskTriplet parse_task_body(const std::string& body) {
  const json j = parse_json(body);
  if (j.is_string()) {
    return parse_triplet(j.get<std::string>());
  }
  if (!j.is_object()) {
    throw Error(ErrorCode::BadRequest, "task body must be an object or a string");
  }
  if (j.contains("triplet")) {
    if (!j["triplet"].is_string()) {
      throw Error(ErrorCode::BadRequest, "'triplet' must be a string");
    }
    return parse_triplet(j["triplet"].get<std::string>());
  }
  std::map<std::string, std::string> fields;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_string()) {
      throw Error(ErrorCode::BadRequest, "'" + key + "' must be a string");
    }
    fields[key] = value.get<std::string>();
  }
  return parse_triplet(fields);
}

Verdict parse_verdict_body(const std::string& body) {
  const json j = parse_json(body);
  if (!j.is_object() || !j.contains("verdict") || !j["verdict"].is_string()) {
    throw Error(ErrorCode::BadRequest, "confirmation needs a string 'verdict'");
  }
  const std::string verdict = normalize_label(j["verdict"].get<std::string>());
  std::vector<std::string> regions;
  if (j.contains("regions")) {
    if (!j["regions"].is_array()) {
      throw Error(ErrorCode::BadRequest, "'regions' must be an array of strings");
    }
    for (const auto& region : j["regions"]) {
      if (!region.is_string()) {
        throw Error(ErrorCode::BadRequest, "'regions' must be an array of strings");
      }
      regions.push_back(normalize_label(region.get<std::string>()));
    }
  }
  if (verdict == "accepted" || verdict == "accept") {
    if (!regions.empty()) {
      throw Error(ErrorCode::BadRequest, "an accepted verdict takes no regions");
    }
    return Verdict::accept();
  }
  if (verdict == "rejected" || verdict == "reject") {
    return Verdict::reject(std::move(regions));
  }
  throw Error(ErrorCode::BadRequest, "verdict must be 'accepted' or 'rejected'");
}

HttpService::HttpService(Orchestrator& orchestrator)
    : orchestrator_(orchestrator), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) {
    return server_->bind_to_any_port(host);
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error(ErrorCode::BadRequest, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpService::start() {
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void HttpService::listen() { server_->listen_after_bind(); }

void HttpService::stop() {
  stopping_ = true;
  server_->stop();
  if (thread_.joinable()) {
    thread_.join();
  }
}

void HttpService::install_routes() {
  auto& server = *server_;
  Orchestrator& orch = orchestrator_;

  server.Get("/workspace", guarded([&orch](const httplib::Request&, httplib::Response& res) {
               res.set_content(orch.workspace_status().dump(), kJson);
             }));

  server.Get("/combinations", guarded([&orch](const httplib::Request&, httplib::Response& res) {
               json out = json::array();
               for (const auto& option : orch.combinations()) {
                 out.push_back(triplet_to_json(option));
               }
               res.set_content(out.dump(), kJson);
             }));

  server.Post("/tasks", guarded([&orch](const httplib::Request& req, httplib::Response& res) {
                const std::string id = orch.submit_task(parse_task_body(req.body));
                const TaskRecord record = orch.get_task(id);
                res.status = 201;
                res.set_header("Location", "/tasks/" + id);
                res.set_content(json{{"id", id}, {"status", std::string(to_string(record.status))}}.dump(),
                                kJson);
              }));

  server.Get(R"(/tasks/([^/]+))", guarded([&orch](const httplib::Request& req, httplib::Response& res) {
               res.set_content(record_summary(orch.get_task(req.matches[1])).dump(), kJson);
             }));

  server.Get(R"(/tasks/([^/]+)/plan)", guarded([&orch](const httplib::Request& req, httplib::Response& res) {
               std::size_t index = 0;
               if (req.has_param("index")) {
                 const std::int64_t parsed = parse_cursor(req.get_param_value("index"));
                 if (parsed < 0) {
                   throw Error(ErrorCode::BadRequest, "plan index must not be negative");
                 }
                 index = static_cast<std::size_t>(parsed);
               }
               res.set_content(orch.get_plan(req.matches[1], index), kJson);
             }));

  server.Get(R"(/tasks/([^/]+)/explanation)",
             guarded([&orch](const httplib::Request& req, httplib::Response& res) {
               res.set_content(orch.get_explanation(req.matches[1]).dump(), kJson);
             }));

  server.Post(R"(/tasks/([^/]+)/confirmation)",
              guarded([&orch](const httplib::Request& req, httplib::Response& res) {
                const std::string id = req.matches[1];
                orch.get_task(id);  // UnknownTask before body errors
                const TaskStatus status = orch.confirm(id, parse_verdict_body(req.body));
                res.set_content(json{{"id", id}, {"status", std::string(to_string(status))}}.dump(), kJson);
              }));

  server.Get("/events", guarded([this, &orch](const httplib::Request& req, httplib::Response& res) {
               std::int64_t since = 0;
               if (req.has_param("since")) {
                 since = parse_cursor(req.get_param_value("since"));
               } else if (req.has_header("Last-Event-ID")) {
                 since = parse_cursor(req.get_header_value("Last-Event-ID"));
               }
               const std::string accept = req.get_header_value("Accept");
               if (accept.find("text/event-stream") == std::string::npos) {
                 const auto events = orch.stream_events(since);
                 res.set_content(json{{"events", events_json(events)},
                                      {"next", since + static_cast<std::int64_t>(events.size())}}
                                     .dump(),
                                 kJson);
                 return;
               }
               orch.stream_events(since);  // validates the cursor before streaming
               auto cursor = std::make_shared<std::int64_t>(since);
               res.set_header("Cache-Control", "no-cache");
               res.set_chunked_content_provider(
                   "text/event-stream", [this, &orch, cursor](std::size_t, httplib::DataSink& sink) {
                     if (stopping_) {
                       sink.done();
                       return true;
                     }
                     const auto events = orch.wait_events(*cursor, std::chrono::milliseconds(1000));
                     std::string frames;
                     for (const auto& event : events) {
                       frames += sse_frame(event);
                       *cursor = event.cursor;
                     }
                     if (frames.empty()) {
                       frames = ": keep-alive\n\n";
                     }
                     return sink.write(frames.data(), frames.size());
                   });
             }));
}

}  // namespace ccu
