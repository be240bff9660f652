#include "micoach/engine/program.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>

#include "micoach/dsl/parser.hpp"
#include "micoach/dsl/printer.hpp"

namespace micoach::engine {
namespace {

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

ScriptRejected::ScriptRejected(dsl::ValidationReport report)
    : Error("UNVALIDATED_SCRIPT",
            "script has " + std::to_string(report.errors.size()) + " validation error(s)\n" +
                dsl::format_report(report)),
      report_(std::move(report)) {}

Program Program::compile(dsl::ScriptAST ast) {
  auto data = std::make_shared<Data>();
  data->report = dsl::validate(ast);
  if (!data->report.ok()) throw ScriptRejected(data->report);
  data->ast = std::move(ast);
  for (const auto& seg : data->ast.segments) {
    if (seg.skill && std::find(data->skills.begin(), data->skills.end(), *seg.skill) == data->skills.end()) {
      data->skills.push_back(*seg.skill);
    }
    if (seg.kind != dsl::SegmentKind::roleplay) continue;
    try {
      data->paths.emplace(seg.id, dsl::adherent_path(data->ast, seg.id));
    } catch (const Error& e) {
      data->paths.emplace(seg.id, e);
    }
  }
  data->digest = fnv1a_hex(dsl::to_source(data->ast));
  return Program(std::move(data));
}

Program Program::from_source(std::string_view source) { return compile(dsl::parse(source)); }

const dsl::Segment& Program::segment(std::string_view id) const {
  const dsl::Segment* seg = data_->ast.find_segment(id);
  if (!seg) throw Error("UNKNOWN_SEGMENT", "segment '" + std::string(id) + "' is not defined");
  return *seg;
}

const dsl::State& Program::state(std::string_view segment_id, std::string_view state_id) const {
  const dsl::State* st = segment(segment_id).find_state(state_id);
  if (!st) {
    throw Error("UNKNOWN_STATE",
                "state '" + std::string(state_id) + "' is not defined in '" + std::string(segment_id) + "'");
  }
  return *st;
}

const std::vector<dsl::PathUtterance>& Program::recap_path(std::string_view segment_id) const {
  auto it = data_->paths.find(segment_id);
  if (it == data_->paths.end()) {
    throw Error("NOT_ROLEPLAY", "segment '" + std::string(segment_id) + "' is not a role-play segment");
  }
  if (const auto* err = std::get_if<Error>(&it->second)) throw *err;
  return std::get<std::vector<dsl::PathUtterance>>(it->second);
}

}  // namespace micoach::engine
