#include "micoach/engine/session.hpp"

#include <array>
#include <sstream>
#include <utility>

namespace micoach::engine {
namespace {

constexpr std::array<std::pair<Mode, std::string_view>, 3> kModes{{
    {Mode::didactic, "didactic"},
    {Mode::roleplay, "roleplay"},
    {Mode::video, "video"},
}};

constexpr std::array<std::pair<Status, std::string_view>, 3> kStatuses{{
    {Status::active, "active"},
    {Status::awaiting_choice, "awaiting_choice"},
    {Status::completed, "completed"},
}};

constexpr std::array<std::pair<EventKind, std::string_view>, 8> kKinds{{
    {EventKind::AgentUtterance, "AgentUtterance"},
    {EventKind::MenuShown, "MenuShown"},
    {EventKind::ChoiceMade, "ChoiceMade"},
    {EventKind::FailureUtterance, "FailureUtterance"},
    {EventKind::SegmentFailed, "SegmentFailed"},
    {EventKind::SegmentCompleted, "SegmentCompleted"},
    {EventKind::SessionCompleted, "SessionCompleted"},
    {EventKind::RecapUtterance, "RecapUtterance"},
}};

template <typename Table, typename Enum>
std::string_view name_of(const Table& table, Enum value) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "?";
}

template <typename Table>
auto value_of(const Table& table, std::string_view text) -> std::optional<std::remove_cvref_t<decltype(table[0].first)>> {
  for (const auto& [v, name] : table) {
    if (name == text) return v;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Mode mode) { return name_of(kModes, mode); }
std::string_view to_string(Status status) { return name_of(kStatuses, status); }
std::string_view to_string(EventKind kind) { return name_of(kKinds, kind); }

std::optional<Mode> parse_mode(std::string_view text) { return value_of(kModes, text); }
std::optional<Status> parse_status(std::string_view text) { return value_of(kStatuses, text); }
std::optional<EventKind> parse_event_kind(std::string_view text) { return value_of(kKinds, text); }

bool counts_as_turn(EventKind kind) {
  return kind == EventKind::AgentUtterance || kind == EventKind::RecapUtterance || kind == EventKind::ChoiceMade;
}

int display_seconds(std::string_view text) {
  std::istringstream in{std::string(text)};
  int words = 0;
  for (std::string w; in >> w;) ++words;
  return (words * 2 + 4) / 5;  // ceil(words / 2.5)
}

}  // namespace micoach::engine
