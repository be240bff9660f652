#pragma once

#include <optional>
#include <string>
#include <vector>

#include "micoach/engine/program.hpp"
#include "micoach/engine/session.hpp"

namespace micoach::engine {

/// Result of one engine transition: the successor state and the events it
/// emitted, in seq order.
struct Step {
  SessionState state;
  std::vector<TurnEvent> events;
};

/// Pushes the entry segment and runs until the first menu. Video mode runs the
/// whole script, auto-selecting preferred options, and returns a completed
/// session. Didactic mode skips calls to role-play segments (synthesizing
/// their SegmentCompleted) and skips recaps.
///
/// Throws Error MISSING_BINDING if any template cannot be rendered under
/// `mode` with `bindings`.
Step start_session(const Program& program, Mode mode, Bindings bindings, const SessionConfig& config);

/// Applies `choice` to a session awaiting a menu answer, or continues an
/// active session when `choice` is empty. `state` is never modified; errors
/// (UNKNOWN_OPTION, CHOICE_NOT_EXPECTED, ENGINE_HALTED) leave it intact.
Step advance(const Program& program, const SessionState& state, const std::optional<std::string>& choice,
             std::size_t step_bound = 100'000);

ProgressView session_progress(const Program& program, const SessionState& state);

/// Menu the session is waiting on, or nullptr.
const dsl::Menu* pending_menu(const Program& program, const SessionState& state);

/// Rendered labels of the pending menu; empty unless awaiting a choice.
std::vector<OptionView> pending_options(const Program& program, const SessionState& state);

/// Throws std::logic_error if `state` breaks a structural invariant.
void check_invariants(const SessionState& state);

}  // namespace micoach::engine
