#include "micoach/api/service.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <random>

#include <json.hpp>

#include "micoach/curriculum/curriculum.hpp"
#include "micoach/dsl/parser.hpp"
#include "micoach/store/event_json.hpp"

namespace micoach::api {
namespace {

using nlohmann::json;
using store::Audience;

struct HttpError {
  int status;
  std::string code;
  std::string message;
  json extra = json::object();
};

Response json_response(int status, const json& body) { return {status, "application/json", body.dump()}; }

Response error_response(const HttpError& e) {
  json body = e.extra;
  body["code"] = e.code;
  body["message"] = e.message;
  return json_response(e.status, body);
}

json location_json(const SourceLoc& loc) { return {{"line", loc.line}, {"column", loc.column}}; }

int status_for(const std::string& code) {
  if (code == "UNKNOWN_SESSION") return 404;
  if (code == "CHOICE_NOT_EXPECTED" || code == "ENGINE_HALTED" || code == "STALE_SEQ" || code == "SCRIPT_MISMATCH")
    return 409;
  if (code == "UNKNOWN_OPTION" || code == "MISSING_BINDING" || code == "INVALID_ID") return 400;
  return 500;
}

HttpError from_error(const Error& e) {
  HttpError h{status_for(e.code()), e.code(), e.what()};
  if (e.location()) h.extra["location"] = location_json(*e.location());
  return h;
}

json events_json(const std::vector<engine::TurnEvent>& events) {
  json arr = json::array();
  for (const auto& ev : events) arr.push_back(store::event_to_json(ev, Audience::trainee));
  return arr;
}

json options_json(const std::vector<engine::OptionView>& options) {
  json arr = json::array();
  for (const auto& o : options) arr.push_back({{"id", o.id}, {"label", o.label}});
  return arr;
}

json parse_body(const Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw HttpError{400, "BAD_REQUEST", "request body must be a JSON object"};
  return j;
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::string new_session_id() {
  static thread_local std::mt19937_64 gen{std::random_device{}() ^
                                          static_cast<std::uint64_t>(
                                              std::chrono::steady_clock::now().time_since_epoch().count())};
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(gen()),
                static_cast<unsigned long long>(gen()));
  return buf;
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    if (path[i] == '/') {
      ++i;
      continue;
    }
    const auto j = path.find('/', i);
    parts.emplace_back(path.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i));
    if (j == std::string_view::npos) break;
    i = j;
  }
  return parts;
}

}  // namespace

struct Service::Live {
  std::mutex mutex;
  engine::SessionState state;
  std::int64_t last_ts = 0;
};

Service::Service(ServiceConfig config) : config_(std::move(config)), store_(config_.data_dir, config_.store_options) {
  if (!config_.clock) {
    config_.clock = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
  if (config_.program) {
    program_ = config_.program;
    return;
  }
  try {
    program_ = curriculum::load_curriculum(config_.curriculum_dir).program;
  } catch (const engine::ScriptRejected& e) {
    load_error_ = e;
    load_report_ = e.report();
  } catch (const Error& e) {
    load_error_ = e;
  }
}

Service::~Service() = default;

std::int64_t Service::now() const { return config_.clock(); }

bool Service::is_admin(const Request& req) const {
  if (!config_.admin_token || config_.admin_token->empty()) return false;
  auto it = req.headers.find("authorization");
  return it != req.headers.end() && it->second == "Bearer " + *config_.admin_token;
}

Response Service::handle(const Request& req) {
  try {
    const auto parts = split_path(req.path);
    const bool get = req.method == "GET";
    const bool post = req.method == "POST";
    auto method_not_allowed = [] { return error_response({405, "METHOD_NOT_ALLOWED", "method not allowed"}); };

    if (parts.size() == 1 && parts[0] == "healthz") {
      return get ? json_response(200, {{"status", "ok"}}) : method_not_allowed();
    }
    if (parts.size() >= 2 && parts[0] == "api") {
      if (parts[1] == "scripts" && parts.size() == 2) return post ? check_script(req) : method_not_allowed();
      if (parts[1] == "sessions") {
        if (parts.size() == 2) return post ? create_session(req) : method_not_allowed();
        if (parts.size() == 4) {
          const std::string& id = parts[2];
          const std::string& leaf = parts[3];
          if (leaf == "turn") return get ? get_turn(id, req) : method_not_allowed();
          if (leaf == "choice") return post ? post_choice(id, req) : method_not_allowed();
          if (leaf == "progress") return get ? get_progress(id) : method_not_allowed();
          if (leaf == "export") return get ? export_session(id, req) : method_not_allowed();
        }
      }
    }
    return error_response({404, "NOT_FOUND", "no route for " + req.method + " " + req.path});
  } catch (const HttpError& e) {
    return error_response(e);
  } catch (const Error& e) {
    return error_response(from_error(e));
  } catch (const std::exception& e) {
    return error_response({500, "INTERNAL", e.what()});
  }
}

std::shared_ptr<Service::Live> Service::live(const std::string& id) {
  std::lock_guard lock(sessions_mutex_);
  if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
  if (!program_ || !store_.has_session(id)) {
    throw HttpError{404, "UNKNOWN_SESSION", "no session '" + id + "'"};
  }
  auto loaded = store_.load_session(id, *program_);
  auto entry = std::make_shared<Live>();
  entry->last_ts = loaded.log.records.empty() ? 0 : loaded.log.records.back().ts;
  if (!loaded.unlogged.empty()) {
    entry->last_ts = std::max(entry->last_ts, now());
    store_.append_events(id, entry->last_ts, loaded.unlogged);
  }
  entry->state = std::move(loaded.state);
  sessions_.emplace(id, entry);
  return entry;
}

Response Service::create_session(const Request& req) {
  if (!program_) {
    HttpError e{422, "VALIDATION_FAILED", load_error_ ? load_error_->what() : "no script loaded"};
    if (load_error_ && load_error_->code() != "UNVALIDATED_SCRIPT") e.code = load_error_->code();
    if (load_report_) e.extra["report"] = store::report_to_json(*load_report_);
    throw e;
  }
  const json body = parse_body(req);

  std::string user_id;
  if (body.contains("user_id")) {
    if (!body["user_id"].is_string()) throw HttpError{400, "BAD_REQUEST", "user_id must be a string"};
    user_id = body["user_id"].get<std::string>();
  }
  if (!body.contains("mode") || !body["mode"].is_string()) {
    throw HttpError{400, "INVALID_MODE", "mode must be one of didactic, roleplay, video"};
  }
  const auto mode = engine::parse_mode(body["mode"].get<std::string>());
  if (!mode) throw HttpError{400, "INVALID_MODE", "unknown mode '" + body["mode"].get<std::string>() + "'"};

  engine::Bindings bindings;
  if (body.contains("bindings")) {
    const json& b = body["bindings"];
    if (!b.is_object()) throw HttpError{400, "INVALID_BINDINGS", "bindings must be an object of strings"};
    for (const auto& [k, v] : b.items()) {
      if (!v.is_string()) throw HttpError{400, "INVALID_BINDINGS", "binding '" + k + "' must be a string"};
      bindings[k] = v.get<std::string>();
    }
  }

  const std::int64_t ts = now();
  if (!user_id.empty()) {
    if (auto user = store_.find_user(user_id)) {
      for (const auto& [k, v] : user->bindings) bindings.try_emplace(k, v);
    } else {
      store_.create_user({user_id, bindings, ts});
    }
  }

  const std::string id = new_session_id();
  engine::Step step = engine::start_session(*program_, *mode, bindings, {id});
  store_.create_session({id, user_id, *mode, bindings, ts, program_->ast().name, program_->ast().version,
                         program_->digest()});
  store_.append_events(id, ts, step.events);

  auto entry = std::make_shared<Live>();
  entry->state = step.state;
  entry->last_ts = ts;
  {
    std::lock_guard lock(sessions_mutex_);
    sessions_.emplace(id, entry);
  }
  return json_response(201, {{"session_id", id},
                             {"mode", engine::to_string(*mode)},
                             {"status", engine::to_string(step.state.status)},
                             {"events", events_json(step.events)},
                             {"options", options_json(engine::pending_options(*program_, step.state))}});
}

Response Service::get_turn(const std::string& id, const Request& req) {
  std::uint64_t after = 0;
  if (auto it = req.query.find("after"); it != req.query.end()) {
    auto v = parse_u64(it->second);
    if (!v) throw HttpError{400, "BAD_REQUEST", "after must be a non-negative integer"};
    after = *v;
  }
  auto entry = live(id);
  std::lock_guard lock(entry->mutex);
  const auto log = store_.read_log(id);
  std::vector<engine::TurnEvent> events;
  for (const auto& r : log.records) {
    if (r.event.seq > after) events.push_back(r.event);
  }
  return json_response(200, {{"status", engine::to_string(entry->state.status)},
                             {"last_seq", entry->state.last_seq},
                             {"events", events_json(events)},
                             {"options", options_json(engine::pending_options(*program_, entry->state))}});
}

Response Service::post_choice(const std::string& id, const Request& req) {
  const json body = parse_body(req);
  if (!body.contains("option_id") || !body["option_id"].is_string()) {
    throw HttpError{400, "BAD_REQUEST", "option_id must be a string"};
  }
  const std::string option_id = body["option_id"].get<std::string>();
  std::optional<std::uint64_t> seq;
  if (body.contains("seq")) {
    if (!body["seq"].is_number_unsigned()) throw HttpError{400, "BAD_REQUEST", "seq must be a non-negative integer"};
    seq = body["seq"].get<std::uint64_t>();
  }

  auto entry = live(id);
  std::lock_guard lock(entry->mutex);

  if (seq && *seq != entry->state.last_seq) {
    // A retry of a choice that was already applied: answer with the batch it
    // produced instead of advancing again.
    const auto log = store_.read_log(id);
    std::vector<engine::TurnEvent> batch;
    for (const auto& r : log.records) {
      if (r.event.seq <= *seq) continue;
      if (batch.empty() && (r.event.kind != engine::EventKind::ChoiceMade || r.event.option_id != option_id)) break;
      batch.push_back(r.event);
      if (r.event.kind == engine::EventKind::MenuShown || r.event.kind == engine::EventKind::SessionCompleted) break;
    }
    if (batch.empty()) {
      throw HttpError{409, "STALE_SEQ",
                      "seq " + std::to_string(*seq) + " does not match the session (at " +
                          std::to_string(entry->state.last_seq) + ")"};
    }
    return json_response(200, {{"status", engine::to_string(entry->state.status)},
                               {"events", events_json(batch)},
                               {"options", options_json(engine::pending_options(*program_, entry->state))}});
  }

  engine::Step step = engine::advance(*program_, entry->state, option_id);
  const std::int64_t ts = std::max(entry->last_ts, now());
  store_.append_events(id, ts, step.events);
  entry->state = std::move(step.state);
  entry->last_ts = ts;
  return json_response(200, {{"status", engine::to_string(entry->state.status)},
                             {"events", events_json(step.events)},
                             {"options", options_json(engine::pending_options(*program_, entry->state))}});
}

Response Service::get_progress(const std::string& id) {
  auto entry = live(id);
  std::lock_guard lock(entry->mutex);
  json j = store::progress_to_json(engine::session_progress(*program_, entry->state));
  j["status"] = engine::to_string(entry->state.status);
  return json_response(200, j);
}

Response Service::export_session(const std::string& id, const Request& req) {
  if (!is_admin(req)) throw HttpError{401, "UNAUTHORIZED", "export requires the admin token"};
  std::string format = "jsonl";
  if (auto it = req.query.find("format"); it != req.query.end()) format = it->second;
  store::ExportFormat fmt;
  if (format == "jsonl") {
    fmt = store::ExportFormat::jsonl;
  } else if (format == "csv") {
    fmt = store::ExportFormat::csv;
  } else {
    throw HttpError{400, "BAD_REQUEST", "format must be jsonl or csv"};
  }
  if (!store_.has_session(id)) throw HttpError{404, "UNKNOWN_SESSION", "no session '" + id + "'"};
  std::string text;
  {
    auto entry = live(id);
    std::lock_guard lock(entry->mutex);
    text = store_.export_events(id, fmt);
  }
  return {200, fmt == store::ExportFormat::csv ? "text/csv" : "application/x-ndjson", std::move(text)};
}

Response Service::check_script(const Request& req) {
  if (!is_admin(req)) throw HttpError{401, "UNAUTHORIZED", "script upload requires the admin token"};
  const std::string* source = &req.body;
  if (auto it = req.files.find("script"); it != req.files.end()) {
    source = &it->second;
  } else if (!req.files.empty()) {
    source = &req.files.begin()->second;
  }
  dsl::ScriptAST ast;
  try {
    ast = dsl::parse(*source);
  } catch (const dsl::ParseError& e) {
    throw HttpError{422, "PARSE_ERROR", e.what(), {{"location", location_json(*e.location())}}};
  }
  const auto report = dsl::validate(ast);
  if (!report.ok()) {
    throw HttpError{422, "VALIDATION_FAILED", std::to_string(report.errors.size()) + " validation error(s)",
                    {{"report", store::report_to_json(report)}}};
  }
  return json_response(200, store::report_to_json(report));
}

}  // namespace micoach::api
