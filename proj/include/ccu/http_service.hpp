// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "ccu/error.hpp"
#include "ccu/orchestrator.hpp"

namespace httplib {
class Server;
}

namespace ccu {

/// Status code used for an error response.
int http_status(ErrorCode code);

/// `{"code": ..., "message": ...}`
std::string error_body(const Error& error);

/// Parses a POST /tasks body: `{"triplet": "p - m - o"}`, the labeled form
/// `{"process", "material", "object"}`, or a bare JSON string.
TaskTriplet parse_task_body(const std::string& body);

/// Parses a POST /tasks/{id}/confirmation body:
/// `{"verdict": "accepted"}` or `{"verdict": "rejected", "regions": [...]}`.
Verdict parse_verdict_body(const std::string& body);

/// JSON over HTTP in front of an Orchestrator. `GET /events` answers with a
/// JSON page by default and with a server-sent event stream when the client
/// accepts `text/event-stream`.
class HttpService {
 public:
  explicit HttpService(Orchestrator& orchestrator);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds and returns the port (pass 0 for an ephemeral one).
  int bind(const std::string& host, int port);
  /// Serves on a background thread.
  void start();
  /// Serves on the calling thread until stop().
  void listen();
  void stop();

 private:
  void install_routes();

  Orchestrator& orchestrator_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::atomic<bool> stopping_{false};
};

}  // namespace ccu
