#pragma once

// HTTP adapter exposing EvalService:
//
//   GET  /api/studies/{study}/participants/{pid}/config
//   POST /api/studies/{study}/participants/{pid}/pages/{n}/ratings
//   POST /api/studies/{study}/participants/{pid}/events
//   POST /api/studies/{study}/participants/{pid}/survey
//   GET  /api/studies/{study}/export?format=csv|json
//   GET  /healthz

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "hemvip/service.hpp"

namespace hemvip {

struct HttpOptions {
  // Browser bundle served at "/".
  std::optional<std::filesystem::path> static_dir;
  // Local stimulus files served at "/media".
  std::optional<std::filesystem::path> media_dir;
};

class HttpServer {
 public:
  HttpServer(EvalService& service, HttpOptions options = {});
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds `port` (0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hemvip
