#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "micoach/engine/engine.hpp"
#include "micoach/store/event_json.hpp"

namespace micoach::store {

struct UserRecord {
  std::string user_id;
  engine::Bindings bindings;  // profile fields used for tailoring
  std::int64_t created_at = 0;

  friend bool operator==(const UserRecord&, const UserRecord&) = default;
};

struct SessionMeta {
  std::string session_id;
  std::string user_id;
  engine::Mode mode = engine::Mode::roleplay;
  engine::Bindings bindings;
  std::int64_t created_at = 0;
  std::string script_name;
  int script_version = 0;
  std::string script_digest;

  friend bool operator==(const SessionMeta&, const SessionMeta&) = default;
};

struct LoadedSession {
  engine::SessionState state;
  EventLog log;
  /// Events the engine produced on replay past the end of the log: the tail of
  /// a batch interrupted mid-write. Callers append them to repair the log.
  std::vector<engine::TurnEvent> unlogged;
};

struct StoreOptions {
  /// fsync after every append and metadata write.
  bool sync = true;
};

/// File-backed store rooted at a data directory:
///
///   <root>/users.jsonl
///   <root>/sessions/<id>.jsonl       one {"crc","event","ts"} record per line
///   <root>/sessions/<id>.meta.json
///
/// Session logs are append-only. Each session has a single writer at a time;
/// readers of other sessions are never blocked.
class Store {
 public:
  explicit Store(std::filesystem::path root, StoreOptions options = {});

  const std::filesystem::path& root() const { return root_; }

  /// Throws Error DUPLICATE_USER.
  void create_user(const UserRecord& user);
  std::optional<UserRecord> find_user(std::string_view user_id) const;

  /// Throws Error DUPLICATE_SESSION or INVALID_ID.
  void create_session(const SessionMeta& meta);
  /// Throws Error UNKNOWN_SESSION.
  SessionMeta session_meta(std::string_view session_id) const;
  bool has_session(std::string_view session_id) const;
  std::vector<std::string> list_sessions() const;

  /// Appends one event. Requires event.seq == last seq + 1 (SEQ_GAP) and
  /// ts >= last ts (TS_ORDER). Durable once this returns.
  void append_event(std::string_view session_id, std::int64_t ts, const engine::TurnEvent& event);
  /// All-or-nothing append of a contiguous batch sharing one timestamp.
  void append_events(std::string_view session_id, std::int64_t ts, std::span<const engine::TurnEvent> events);

  /// Reads and verifies the whole log. Throws Error CORRUPT_LOG naming the
  /// byte offset of the first bad record.
  EventLog read_log(std::string_view session_id) const;

  /// Rebuilds the session by replaying its log through the engine. Throws
  /// UNKNOWN_SESSION, CORRUPT_LOG (framing, checksum or replay mismatch) and
  /// SCRIPT_MISMATCH (log was written against a different script).
  LoadedSession load_session(std::string_view session_id, const engine::Program& program) const;

  std::string export_events(std::string_view session_id, ExportFormat format,
                            Audience audience = Audience::researcher) const;

 private:
  struct Slot {
    std::shared_mutex mutex;
    bool cursor_valid = false;
    std::uint64_t last_seq = 0;
    std::int64_t last_ts = 0;
  };

  Slot& slot(std::string_view session_id) const;
  std::filesystem::path log_path(std::string_view session_id) const;
  std::filesystem::path meta_path(std::string_view session_id) const;
  void require_session(std::string_view session_id) const;
  EventLog read_log_unlocked(std::string_view session_id) const;
  void load_users() const;

  std::filesystem::path root_;
  StoreOptions options_;

  mutable std::mutex slots_mutex_;
  mutable std::map<std::string, std::unique_ptr<Slot>, std::less<>> slots_;

  mutable std::mutex users_mutex_;
  mutable bool users_loaded_ = false;
  mutable std::map<std::string, UserRecord, std::less<>> users_;
};

}  // namespace micoach::store
