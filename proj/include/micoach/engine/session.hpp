#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "micoach/dsl/ast.hpp"

namespace micoach::engine {

/// Delivery mode, fixed for the lifetime of a session.
enum class Mode { didactic, roleplay, video };

enum class Status { active, awaiting_choice, completed };

using Bindings = std::map<std::string, std::string, std::less<>>;

struct Frame {
  std::string segment;
  std::string state;
  std::size_t action_index = 0;
  std::optional<std::string> onfail;  // caller state to resume at if this segment fails

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct SessionState {
  std::string session_id;
  Mode mode = Mode::roleplay;
  std::vector<Frame> stack;
  Bindings bindings;
  std::uint64_t mistake_count = 0;
  std::map<std::string, std::uint64_t, std::less<>> per_segment_mistakes;
  Status status = Status::active;
  std::uint64_t turn_counter = 0;
  std::uint64_t last_seq = 0;
  std::set<std::string, std::less<>> completed_segments;

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

enum class EventKind {
  AgentUtterance,
  MenuShown,
  ChoiceMade,
  FailureUtterance,
  SegmentFailed,
  SegmentCompleted,
  SessionCompleted,
  RecapUtterance,
};

struct OptionView {
  std::string id;
  std::string label;

  friend bool operator==(const OptionView&, const OptionView&) = default;
};

struct TurnEvent {
  std::uint64_t seq = 0;
  EventKind kind = EventKind::AgentUtterance;
  std::optional<std::string> speaker;
  std::optional<std::string> text;
  std::optional<std::vector<OptionView>> options;  // MenuShown only
  std::string segment;
  std::optional<std::string> option_id;       // ChoiceMade only
  std::optional<dsl::Adherence> adherence;    // ChoiceMade on tagged options; never trainee-facing
  std::optional<int> display_seconds;         // video-mode pacing hint

  friend bool operator==(const TurnEvent&, const TurnEvent&) = default;
};

struct ProgressView {
  int skills_total = 0;
  int skills_completed = 0;
  std::optional<std::string> current_skill;
  std::uint64_t mistakes = 0;
  std::uint64_t elapsed_turns = 0;

  friend bool operator==(const ProgressView&, const ProgressView&) = default;
};

struct SessionConfig {
  std::string session_id;
  /// Upper bound on actions executed without user input in one call.
  std::size_t step_bound = 100'000;
};

std::string_view to_string(Mode mode);
std::string_view to_string(Status status);
std::string_view to_string(EventKind kind);
std::optional<Mode> parse_mode(std::string_view text);
std::optional<Status> parse_status(std::string_view text);
std::optional<EventKind> parse_event_kind(std::string_view text);

/// AgentUtterance, RecapUtterance and ChoiceMade each count as one turn.
bool counts_as_turn(EventKind kind);

/// Suggested display time for `text` at 150 words per minute, rounded up.
int display_seconds(std::string_view text);

}  // namespace micoach::engine
