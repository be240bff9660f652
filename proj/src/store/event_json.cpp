#include "micoach/store/event_json.hpp"

#include <sstream>

#include "micoach/error.hpp"

namespace micoach::store {

using nlohmann::json;

json event_to_json(const engine::TurnEvent& ev, Audience audience) {
  json j;
  j["seq"] = ev.seq;
  j["kind"] = engine::to_string(ev.kind);
  j["segment"] = ev.segment;
  if (ev.speaker) j["speaker"] = *ev.speaker;
  if (ev.text) j["text"] = *ev.text;
  if (ev.options) {
    json opts = json::array();
    for (const auto& o : *ev.options) opts.push_back({{"id", o.id}, {"label", o.label}});
    j["options"] = std::move(opts);
  }
  if (ev.option_id) j["option_id"] = *ev.option_id;
  if (ev.adherence && audience == Audience::researcher) j["adherence"] = dsl::to_string(*ev.adherence);
  if (ev.display_seconds) j["display_seconds"] = *ev.display_seconds;
  return j;
}

engine::TurnEvent event_from_json(const json& j) {
  try {
    engine::TurnEvent ev;
    ev.seq = j.at("seq").get<std::uint64_t>();
    const auto kind = engine::parse_event_kind(j.at("kind").get<std::string>());
    if (!kind) throw Error("BAD_EVENT", "unknown event kind " + j.at("kind").dump());
    ev.kind = *kind;
    ev.segment = j.at("segment").get<std::string>();
    if (j.contains("speaker")) ev.speaker = j["speaker"].get<std::string>();
    if (j.contains("text")) ev.text = j["text"].get<std::string>();
    if (j.contains("options")) {
      std::vector<engine::OptionView> opts;
      for (const auto& o : j["options"]) opts.push_back({o.at("id").get<std::string>(), o.at("label").get<std::string>()});
      ev.options = std::move(opts);
    }
    if (j.contains("option_id")) ev.option_id = j["option_id"].get<std::string>();
    if (j.contains("adherence")) {
      const auto tag = j["adherence"].get<std::string>();
      if (tag == "adherent") {
        ev.adherence = dsl::Adherence::adherent;
      } else if (tag == "nonadherent") {
        ev.adherence = dsl::Adherence::nonadherent;
      } else {
        throw Error("BAD_EVENT", "unknown adherence '" + tag + "'");
      }
    }
    if (j.contains("display_seconds")) ev.display_seconds = j["display_seconds"].get<int>();
    return ev;
  } catch (const json::exception& e) {
    throw Error("BAD_EVENT", std::string("malformed event: ") + e.what());
  }
}

namespace {

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string export_log(const EventLog& log, ExportFormat format, Audience audience) {
  std::ostringstream os;
  if (format == ExportFormat::jsonl) {
    for (const auto& rec : log.records) {
      json j = event_to_json(rec.event, audience);
      j["ts"] = rec.ts;
      os << j.dump() << '\n';
    }
    return os.str();
  }
  os << "ts,seq,kind,segment,adherence\r\n";
  for (const auto& rec : log.records) {
    std::string adherence;
    if (rec.event.adherence && audience == Audience::researcher) adherence = dsl::to_string(*rec.event.adherence);
    os << rec.ts << ',' << rec.event.seq << ',' << engine::to_string(rec.event.kind) << ','
       << csv_field(rec.event.segment) << ',' << csv_field(adherence) << "\r\n";
  }
  return os.str();
}

std::vector<LogRecord> parse_jsonl_export(std::string_view text) {
  std::vector<LogRecord> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("ts")) {
      throw Error("BAD_EVENT", "unparseable export line");
    }
    out.push_back({j["ts"].get<std::int64_t>(), event_from_json(j)});
  }
  return out;
}

json report_to_json(const dsl::ValidationReport& report) {
  auto list = [](const std::vector<dsl::Diagnostic>& ds) {
    json arr = json::array();
    for (const auto& d : ds) {
      arr.push_back({{"code", d.code},
                     {"location", {{"line", d.location.line}, {"column", d.location.column}}},
                     {"message", d.message}});
    }
    return arr;
  };
  return {{"ok", report.ok()}, {"errors", list(report.errors)}, {"warnings", list(report.warnings)}};
}

json progress_to_json(const engine::ProgressView& p) {
  json j{{"skills_total", p.skills_total},
         {"skills_completed", p.skills_completed},
         {"mistakes", p.mistakes},
         {"elapsed_turns", p.elapsed_turns}};
  j["current_skill"] = p.current_skill ? json(*p.current_skill) : json(nullptr);
  return j;
}

}  // namespace micoach::store
