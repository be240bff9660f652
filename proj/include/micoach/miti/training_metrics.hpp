#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "micoach/dsl/ast.hpp"
#include "micoach/store/event_json.hpp"

namespace micoach::miti {

struct TrainingMetrics {
  double duration_seconds = 0;
  std::uint64_t mistakes = 0;        // nonadherent ChoiceMade events
  std::uint64_t failed_segments = 0;  // SegmentFailed events
  std::uint64_t turns = 0;
  /// Mistakes keyed by the skill of the segment they happened in, or by
  /// segment id when no script is supplied or the segment has no skill.
  std::map<std::string, std::uint64_t> per_skill_mistakes;
};

/// Throws Error EMPTY_LOG.
TrainingMetrics training_metrics(const store::EventLog& log, const dsl::ScriptAST* script = nullptr);

}  // namespace micoach::miti
