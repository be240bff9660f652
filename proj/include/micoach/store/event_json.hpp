#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "micoach/dsl/validator.hpp"
#include "micoach/engine/session.hpp"

namespace micoach::store {

/// Who will read a serialized event. Trainee-facing JSON never carries
/// adherence tags; researcher JSON keeps every field.
enum class Audience { trainee, researcher };

nlohmann::json event_to_json(const engine::TurnEvent& event, Audience audience);

/// Inverse of event_to_json(..., researcher). Throws Error BAD_EVENT.
engine::TurnEvent event_from_json(const nlohmann::json& j);

struct LogRecord {
  std::int64_t ts = 0;  // milliseconds since epoch, caller supplied
  engine::TurnEvent event;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

/// Append-only record of one session.
struct EventLog {
  std::string session_id;
  std::vector<LogRecord> records;
};

enum class ExportFormat { jsonl, csv };

/// JSONL: one event object per line with its `ts` merged in.
/// CSV: header `ts,seq,kind,segment,adherence`, CRLF rows, RFC 4180 quoting.
std::string export_log(const EventLog& log, ExportFormat format, Audience audience = Audience::researcher);

/// Parses a JSONL export back into records. Throws Error BAD_EVENT.
std::vector<LogRecord> parse_jsonl_export(std::string_view text);

nlohmann::json report_to_json(const dsl::ValidationReport& report);
nlohmann::json progress_to_json(const engine::ProgressView& progress);

}  // namespace micoach::store
