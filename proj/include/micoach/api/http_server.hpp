#pragma once

#include <memory>
#include <string>
#include <thread>

#include "micoach/api/service.hpp"

namespace micoach::api {

/// Background HTTP listener, mainly for tests and embedding.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  /// Binds to an ephemeral port on `host` and starts listening on a worker
  /// thread. Returns the port, or -1 on failure.
  int start(const std::string& host = "127.0.0.1");
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

}  // namespace micoach::api
