#pragma once

#include <json.hpp>

#include "micoach/miti/scorer.hpp"

namespace micoach::miti {

/// {"utterances":[{"speaker","text","code"?}], "global_ratings":{"empathy",
/// "partnership"}, "skill_ratings":[6 numbers]?}. Throws Error
/// INVALID_TRANSCRIPT.
AnnotatedTranscript transcript_from_json(const nlohmann::json& j);

/// Undefined R:Q ratios serialize as null.
nlohmann::json scorecard_to_json(const MitiScorecard& card);

}  // namespace micoach::miti
