#include "micoach/dsl/ast.hpp"

#include <algorithm>

namespace micoach::dsl {

bool Template::has_placeholders() const {
  return std::any_of(parts.begin(), parts.end(),
                     [](const TemplatePart& p) { return p.kind == TemplatePart::Kind::placeholder; });
}

SourceLoc location_of(const Action& action) {
  return std::visit([](const auto& a) { return a.loc; }, action);
}

bool is_terminator(const Action& action) {
  return std::holds_alternative<Menu>(action) || std::holds_alternative<Goto>(action) ||
         std::holds_alternative<End>(action);
}

const State* Segment::find_state(std::string_view state_id) const {
  auto it = std::find_if(states.begin(), states.end(), [&](const State& s) { return s.id == state_id; });
  return it == states.end() ? nullptr : &*it;
}

const FailureHandler* Segment::handler_for(std::string_view state_id) const {
  const FailureHandler* fallback = nullptr;
  for (const auto& h : failure_handlers) {
    if (h.is_default()) {
      if (!fallback) fallback = &h;
    } else if (std::find(h.for_states.begin(), h.for_states.end(), state_id) != h.for_states.end()) {
      return &h;
    }
  }
  return fallback;
}

const Segment* ScriptAST::find_segment(std::string_view segment_id) const {
  auto idx = segment_index(segment_id);
  return idx ? &segments[*idx] : nullptr;
}

std::optional<std::size_t> ScriptAST::segment_index(std::string_view segment_id) const {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].id == segment_id) return i;
  }
  return std::nullopt;
}

ScriptAST without_locations(ScriptAST ast) {
  ast.entry_loc = {};
  for (auto& seg : ast.segments) {
    seg.loc = {};
    for (auto& h : seg.failure_handlers) h.loc = {};
    for (auto& st : seg.states) {
      st.loc = {};
      for (auto& action : st.actions) {
        std::visit(
            [](auto& a) {
              a.loc = {};
              if constexpr (std::is_same_v<std::decay_t<decltype(a)>, Menu>) {
                for (auto& opt : a.options) opt.loc = {};
              }
            },
            action);
      }
    }
  }
  return ast;
}

std::string_view to_string(SegmentKind kind) {
  return kind == SegmentKind::roleplay ? "roleplay" : "pedagogy";
}

std::string_view to_string(Adherence tag) {
  switch (tag) {
    case Adherence::adherent: return "adherent";
    case Adherence::nonadherent: return "nonadherent";
    case Adherence::untagged: break;
  }
  return "untagged";
}

}  // namespace micoach::dsl
