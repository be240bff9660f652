#include "micoach/store/store.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace micoach::store {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool valid_id(std::string_view id) {
  return !id.empty() && id.size() <= 128 && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
  });
}

std::uint32_t checksum(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

[[noreturn]] void io_error(const std::string& what, const fs::path& path) {
  throw Error("IO", what + " '" + path.string() + "': " + std::strerror(errno));
}

void write_all(int fd, std::string_view bytes, const fs::path& path) {
  while (!bytes.empty()) {
    const ssize_t n = ::write(fd, bytes.data(), bytes.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      io_error("write failed", path);
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

void append_file(const fs::path& path, std::string_view bytes, bool sync) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) io_error("cannot open", path);
  try {
    write_all(fd, bytes, path);
    if (sync && ::fsync(fd) != 0) io_error("fsync failed", path);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
}

void replace_file(const fs::path& path, std::string_view bytes, bool sync) {
  fs::path tmp = path;
  tmp += ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_error("cannot open", tmp);
  try {
    write_all(fd, bytes, tmp);
    if (sync && ::fsync(fd) != 0) io_error("fsync failed", tmp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error("cannot read", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json bindings_to_json(const engine::Bindings& b) {
  json j = json::object();
  for (const auto& [k, v] : b) j[k] = v;
  return j;
}

engine::Bindings bindings_from_json(const json& j) {
  engine::Bindings b;
  for (const auto& [k, v] : j.items()) b.emplace(k, v.get<std::string>());
  return b;
}

std::string encode_record(std::int64_t ts, const engine::TurnEvent& ev) {
  const json body = event_to_json(ev, Audience::researcher);
  const std::string dumped = body.dump();
  // Key order is fixed (crc, event, ts) so the checksum covers the exact bytes
  // written for the event body.
  return "{\"crc\":" + std::to_string(checksum(dumped)) + ",\"event\":" + dumped + ",\"ts\":" + std::to_string(ts) +
         "}\n";
}

[[noreturn]] void corrupt(std::string_view session_id, std::size_t offset, const std::string& why) {
  throw Error("CORRUPT_LOG", "session " + std::string(session_id) + ": " + why + " at byte offset " +
                                 std::to_string(offset));
}

}  // namespace

Store::Store(fs::path root, StoreOptions options) : root_(std::move(root)), options_(options) {
  fs::create_directories(root_ / "sessions");
}

fs::path Store::log_path(std::string_view id) const { return root_ / "sessions" / (std::string(id) + ".jsonl"); }
fs::path Store::meta_path(std::string_view id) const {
  return root_ / "sessions" / (std::string(id) + ".meta.json");
}

Store::Slot& Store::slot(std::string_view session_id) const {
  std::lock_guard lock(slots_mutex_);
  auto it = slots_.find(session_id);
  if (it == slots_.end()) it = slots_.emplace(std::string(session_id), std::make_unique<Slot>()).first;
  return *it->second;
}

void Store::load_users() const {
  if (users_loaded_) return;
  const fs::path path = root_ / "users.jsonl";
  if (fs::exists(path)) {
    std::istringstream in(read_file(path));
    for (std::string line; std::getline(in, line);) {
      if (line.empty()) continue;
      const json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) continue;  // torn final line from a crash; the user was never acked
      UserRecord u{j.at("user_id").get<std::string>(), bindings_from_json(j.at("bindings")),
                   j.at("created_at").get<std::int64_t>()};
      users_.emplace(u.user_id, std::move(u));
    }
  }
  users_loaded_ = true;
}

void Store::create_user(const UserRecord& user) {
  std::lock_guard lock(users_mutex_);
  load_users();
  if (user.user_id.empty()) throw Error("INVALID_ID", "user id must not be empty");
  if (users_.contains(user.user_id)) throw Error("DUPLICATE_USER", "user '" + user.user_id + "' already exists");
  const json j{{"user_id", user.user_id}, {"bindings", bindings_to_json(user.bindings)}, {"created_at", user.created_at}};
  append_file(root_ / "users.jsonl", j.dump() + "\n", options_.sync);
  users_.emplace(user.user_id, user);
}

std::optional<UserRecord> Store::find_user(std::string_view user_id) const {
  std::lock_guard lock(users_mutex_);
  load_users();
  auto it = users_.find(user_id);
  if (it == users_.end()) return std::nullopt;
  return it->second;
}

void Store::create_session(const SessionMeta& meta) {
  if (!valid_id(meta.session_id)) throw Error("INVALID_ID", "invalid session id '" + meta.session_id + "'");
  Slot& s = slot(meta.session_id);
  std::unique_lock lock(s.mutex);
  if (fs::exists(meta_path(meta.session_id))) {
    throw Error("DUPLICATE_SESSION", "session '" + meta.session_id + "' already exists");
  }
  const json j{{"session_id", meta.session_id},
               {"user_id", meta.user_id},
               {"mode", engine::to_string(meta.mode)},
               {"bindings", bindings_to_json(meta.bindings)},
               {"created_at", meta.created_at},
               {"script", {{"name", meta.script_name}, {"version", meta.script_version}, {"digest", meta.script_digest}}}};
  append_file(log_path(meta.session_id), "", options_.sync);
  replace_file(meta_path(meta.session_id), j.dump(2) + "\n", options_.sync);
  s.cursor_valid = true;
  s.last_seq = 0;
  s.last_ts = 0;
}

bool Store::has_session(std::string_view session_id) const {
  return valid_id(session_id) && fs::exists(meta_path(session_id));
}

void Store::require_session(std::string_view session_id) const {
  if (!has_session(session_id)) {
    throw Error("UNKNOWN_SESSION", "no session '" + std::string(session_id) + "'");
  }
}

SessionMeta Store::session_meta(std::string_view session_id) const {
  require_session(session_id);
  try {
    const json j = json::parse(read_file(meta_path(session_id)));
    SessionMeta m;
    m.session_id = j.at("session_id").get<std::string>();
    m.user_id = j.at("user_id").get<std::string>();
    const auto mode = engine::parse_mode(j.at("mode").get<std::string>());
    if (!mode) throw Error("CORRUPT_LOG", "session metadata has an unknown mode");
    m.mode = *mode;
    m.bindings = bindings_from_json(j.at("bindings"));
    m.created_at = j.at("created_at").get<std::int64_t>();
    m.script_name = j.at("script").at("name").get<std::string>();
    m.script_version = j.at("script").at("version").get<int>();
    m.script_digest = j.at("script").at("digest").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw Error("CORRUPT_LOG", "unreadable metadata for session " + std::string(session_id) + ": " + e.what());
  }
}

std::vector<std::string> Store::list_sessions() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root_ / "sessions")) {
    const std::string name = entry.path().filename().string();
    constexpr std::string_view suffix = ".meta.json";
    if (name.size() > suffix.size() && name.ends_with(suffix)) ids.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

void Store::append_event(std::string_view session_id, std::int64_t ts, const engine::TurnEvent& event) {
  append_events(session_id, ts, std::span<const engine::TurnEvent>(&event, 1));
}

void Store::append_events(std::string_view session_id, std::int64_t ts, std::span<const engine::TurnEvent> events) {
  require_session(session_id);
  Slot& s = slot(session_id);
  std::unique_lock lock(s.mutex);
  if (!s.cursor_valid) {
    const EventLog log = read_log_unlocked(session_id);
    s.last_seq = log.records.empty() ? 0 : log.records.back().event.seq;
    s.last_ts = log.records.empty() ? 0 : log.records.back().ts;
    s.cursor_valid = true;
  }
  if (events.empty()) return;
  if (s.last_seq > 0 && ts < s.last_ts) {
    throw Error("TS_ORDER", "timestamp " + std::to_string(ts) + " precedes last logged " + std::to_string(s.last_ts));
  }
  std::uint64_t expect = s.last_seq + 1;
  std::string batch;
  for (const auto& ev : events) {
    if (ev.seq != expect) {
      throw Error("SEQ_GAP", "expected seq " + std::to_string(expect) + ", got " + std::to_string(ev.seq));
    }
    ++expect;
    batch += encode_record(ts, ev);
  }
  try {
    append_file(log_path(session_id), batch, options_.sync);
  } catch (...) {
    s.cursor_valid = false;  // the file may hold a partial batch; re-read before the next append
    throw;
  }
  s.last_seq = events.back().seq;
  s.last_ts = ts;
}

EventLog Store::read_log(std::string_view session_id) const {
  require_session(session_id);
  Slot& s = slot(session_id);
  std::shared_lock lock(s.mutex);
  return read_log_unlocked(session_id);
}

EventLog Store::read_log_unlocked(std::string_view session_id) const {
  EventLog log;
  log.session_id = std::string(session_id);
  const std::string bytes = read_file(log_path(session_id));
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const std::size_t nl = bytes.find('\n', offset);
    if (nl == std::string::npos) corrupt(session_id, offset, "truncated record");
    const std::string_view line(bytes.data() + offset, nl - offset);
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("event") || !j.contains("crc") || !j.contains("ts")) {
      corrupt(session_id, offset, "malformed record");
    }
    LogRecord rec;
    try {
      if (j["crc"].get<std::uint32_t>() != checksum(j["event"].dump())) corrupt(session_id, offset, "checksum mismatch");
      rec.ts = j["ts"].get<std::int64_t>();
      rec.event = event_from_json(j["event"]);
    } catch (const json::exception&) {
      corrupt(session_id, offset, "malformed record");
    } catch (const Error& e) {
      if (e.code() == "CORRUPT_LOG") throw;
      corrupt(session_id, offset, e.what());
    }
    const std::uint64_t expected_seq = log.records.empty() ? 1 : log.records.back().event.seq + 1;
    if (rec.event.seq != expected_seq) corrupt(session_id, offset, "sequence gap");
    if (!log.records.empty() && rec.ts < log.records.back().ts) corrupt(session_id, offset, "timestamp regression");
    log.records.push_back(std::move(rec));
    offset = nl + 1;
  }
  return log;
}

LoadedSession Store::load_session(std::string_view session_id, const engine::Program& program) const {
  const SessionMeta meta = session_meta(session_id);
  if (meta.script_digest != program.digest()) {
    throw Error("SCRIPT_MISMATCH", "session " + std::string(session_id) + " was recorded against a different script");
  }
  LoadedSession out;
  out.log = read_log(session_id);
  const auto& records = out.log.records;

  std::size_t pos = 0;
  auto mismatch = [&](const std::string& why) -> Error {
    return Error("CORRUPT_LOG", "session " + std::string(session_id) + ": replay mismatch at seq " +
                                    std::to_string(pos + 1) + ": " + why);
  };
  // Lines up freshly replayed events against the log. Anything past the end
  // of the log is returned as unlogged.
  auto consume = [&](std::vector<engine::TurnEvent>& events) {
    for (auto& ev : events) {
      if (pos < records.size()) {
        if (records[pos].event != ev) throw mismatch("event differs from engine output");
        ++pos;
      } else {
        out.unlogged.push_back(std::move(ev));
      }
    }
  };

  try {
    engine::Step step = engine::start_session(program, meta.mode, meta.bindings, {std::string(session_id)});
    consume(step.events);
    while (pos < records.size()) {
      const engine::TurnEvent& next = records[pos].event;
      if (step.state.status != engine::Status::awaiting_choice || next.kind != engine::EventKind::ChoiceMade ||
          !next.option_id) {
        throw mismatch("unexpected " + std::string(engine::to_string(next.kind)));
      }
      step = engine::advance(program, step.state, next.option_id);
      consume(step.events);
    }
    out.state = std::move(step.state);
  } catch (const Error& e) {
    if (e.code() == "CORRUPT_LOG") throw;
    throw mismatch(e.what());
  }
  return out;
}

std::string Store::export_events(std::string_view session_id, ExportFormat format, Audience audience) const {
  return export_log(read_log(session_id), format, audience);
}

}  // namespace micoach::store
