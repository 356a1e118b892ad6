// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <utility>

#include "annotrack/errors.hpp"
#include "annotrack/service/session.hpp"

namespace annotrack {

/// HTTP status for a library error: 404, 400, 409, 502 or 500.
int http_status(ErrorCode code);

/// "host:port" from ANNOTRACK_ADDR, else 127.0.0.1:8080.
std::pair<std::string, int> bind_address_from_env();

/// JSON/HTTP front end of a Session. Routes live under /api.
class HttpServer {
 public:
  explicit HttpServer(Session& session);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds without serving; port 0 picks a free port. Returns the port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace annotrack
