#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "micoach/error.hpp"

namespace micoach::dsl {

/// One piece of a lexed template string: either literal text or a `{path}` /
/// `{path|fallback}` placeholder.
struct TemplatePart {
  enum class Kind { literal, placeholder };

  Kind kind = Kind::literal;
  std::string text;  // literal text; empty for placeholders
  std::string path;  // dotted binding path, e.g. user.first_name
  std::optional<std::string> fallback;

  static TemplatePart literal(std::string text) {
    return {Kind::literal, std::move(text), {}, std::nullopt};
  }
  static TemplatePart placeholder(std::string path, std::optional<std::string> fallback) {
    return {Kind::placeholder, {}, std::move(path), std::move(fallback)};
  }

  friend bool operator==(const TemplatePart&, const TemplatePart&) = default;
};

struct Template {
  std::vector<TemplatePart> parts;

  bool has_placeholders() const;

  friend bool operator==(const Template&, const Template&) = default;
};

enum class SegmentKind { pedagogy, roleplay };
enum class Adherence { untagged, adherent, nonadherent };

struct Target {
  enum class Kind { state, fail, end };

  Kind kind = Kind::state;
  std::string state;  // set when kind == state

  static Target to_state(std::string id) { return {Kind::state, std::move(id)}; }
  static Target fail() { return {Kind::fail, {}}; }
  static Target end() { return {Kind::end, {}}; }

  friend bool operator==(const Target&, const Target&) = default;
};

struct MenuOption {
  std::string id;  // assigned by the parser: "1", "2", ... in source order
  Adherence tag = Adherence::untagged;
  Template label;
  Target target;
  SourceLoc loc;

  friend bool operator==(const MenuOption&, const MenuOption&) = default;
};

struct Say {
  Template text;
  SourceLoc loc;
  friend bool operator==(const Say&, const Say&) = default;
};

struct Menu {
  std::vector<MenuOption> options;
  SourceLoc loc;
  friend bool operator==(const Menu&, const Menu&) = default;
};

struct Goto {
  std::string state;
  SourceLoc loc;
  friend bool operator==(const Goto&, const Goto&) = default;
};

/// Pushes `segment` onto the discourse stack. When the callee completes the
/// caller continues with its next action; when it fails the caller resumes at
/// `onfail` (or re-runs the call when no onfail state is given).
struct Call {
  std::string segment;
  std::optional<std::string> onfail;
  SourceLoc loc;
  friend bool operator==(const Call&, const Call&) = default;
};

/// Replays the adherent path of an earlier role-play segment as context.
struct Recap {
  std::string segment;
  SourceLoc loc;
  friend bool operator==(const Recap&, const Recap&) = default;
};

struct End {
  SourceLoc loc;
  friend bool operator==(const End&, const End&) = default;
};

using Action = std::variant<Say, Menu, Goto, Call, Recap, End>;

SourceLoc location_of(const Action& action);

/// True for actions after which nothing else in the state may run.
bool is_terminator(const Action& action);

struct State {
  std::string id;
  std::vector<Action> actions;
  SourceLoc loc;

  friend bool operator==(const State&, const State&) = default;
};

struct FailureHandler {
  std::vector<std::string> for_states;  // empty: default handler
  std::vector<Template> lines;
  SourceLoc loc;

  bool is_default() const { return for_states.empty(); }

  friend bool operator==(const FailureHandler&, const FailureHandler&) = default;
};

struct Segment {
  std::string id;
  SegmentKind kind = SegmentKind::pedagogy;
  std::string agent;
  std::optional<std::string> skill;
  std::vector<State> states;
  std::vector<FailureHandler> failure_handlers;
  SourceLoc loc;

  const State* find_state(std::string_view state_id) const;
  /// Specific handler for `state_id` if one exists, else the default handler.
  const FailureHandler* handler_for(std::string_view state_id) const;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct ScriptAST {
  std::string name;
  int version = 0;
  std::string entry;
  SourceLoc entry_loc;
  std::vector<Segment> segments;

  const Segment* find_segment(std::string_view segment_id) const;
  std::optional<std::size_t> segment_index(std::string_view segment_id) const;

  friend bool operator==(const ScriptAST&, const ScriptAST&) = default;
};

/// Copy of `ast` with every source location zeroed, for structural comparison.
ScriptAST without_locations(ScriptAST ast);

std::string_view to_string(SegmentKind kind);
std::string_view to_string(Adherence tag);

}  // namespace micoach::dsl
