#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "micoach/dsl/ast.hpp"

namespace micoach::dsl {

/// Speaker id used for the trainee's side of a dialogue.
inline constexpr std::string_view kTraineeSpeaker = "trainee";

struct PathUtterance {
  std::string speaker;  // segment agent, or kTraineeSpeaker
  Template text;

  friend bool operator==(const PathUtterance&, const PathUtterance&) = default;
};

/// The option a success-oriented playthrough picks: the adherent option when
/// the menu has one, otherwise the first option.
const MenuOption& preferred_option(const Menu& menu);

/// Utterances produced by always choosing the adherent option of a role-play
/// segment, from its first state until it ends. Recaps are expanded in place.
///
/// Throws Error NOT_ROLEPLAY for pedagogy segments, UNKNOWN_SEGMENT for
/// undefined ids, and PATH_DIVERGES when the walk does not end within
/// `step_bound` actions or reaches a failure.
std::vector<PathUtterance> adherent_path(const ScriptAST& ast, std::string_view segment,
                                         std::size_t step_bound = 10'000);

}  // namespace micoach::dsl
