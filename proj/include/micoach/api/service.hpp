#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "micoach/engine/program.hpp"
#include "micoach/store/store.hpp"

namespace micoach::api {

/// Transport-neutral request. Header names are lower case.
struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;
  std::string body;
  std::map<std::string, std::string> files;  // multipart field name -> content
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

struct ServiceConfig {
  std::filesystem::path data_dir;
  /// Directory holding manifest.json. Ignored when `program` is set.
  std::filesystem::path curriculum_dir;
  std::optional<engine::Program> program;
  std::optional<std::string> admin_token;
  /// Milliseconds since epoch. Defaults to the system clock.
  std::function<std::int64_t()> clock;
  store::StoreOptions store_options;
};

/// The HTTP+JSON surface: sessions, turns, choices, progress, exports and
/// script checks. Safe to call from many threads; requests for one session
/// are serialized.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();

  Response handle(const Request& request);

  /// False if the curriculum failed to load; session creation then answers 422.
  bool ready() const { return program_.has_value(); }

 private:
  struct Live;

  Response create_session(const Request& req);
  Response get_turn(const std::string& id, const Request& req);
  Response post_choice(const std::string& id, const Request& req);
  Response get_progress(const std::string& id);
  Response export_session(const std::string& id, const Request& req);
  Response check_script(const Request& req);

  bool is_admin(const Request& req) const;
  std::shared_ptr<Live> live(const std::string& id);
  std::int64_t now() const;

  ServiceConfig config_;
  store::Store store_;
  std::optional<engine::Program> program_;
  std::optional<Error> load_error_;
  std::optional<dsl::ValidationReport> load_report_;

  std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Live>, std::less<>> sessions_;
};

/// Serves `service` over HTTP/1.1 until the process is stopped. Returns false
/// if the port cannot be bound.
bool serve(Service& service, const std::string& host, int port);

}  // namespace micoach::api
