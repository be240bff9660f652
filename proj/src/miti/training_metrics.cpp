#include "micoach/miti/training_metrics.hpp"

#include "micoach/error.hpp"

namespace micoach::miti {

TrainingMetrics training_metrics(const store::EventLog& log, const dsl::ScriptAST* script) {
  if (log.records.empty()) throw Error("EMPTY_LOG", "session " + log.session_id + " has no events");
  TrainingMetrics m;
  m.duration_seconds = static_cast<double>(log.records.back().ts - log.records.front().ts) / 1000.0;
  for (const auto& rec : log.records) {
    const auto& ev = rec.event;
    if (engine::counts_as_turn(ev.kind)) ++m.turns;
    if (ev.kind == engine::EventKind::SegmentFailed) ++m.failed_segments;
    if (ev.kind != engine::EventKind::ChoiceMade || ev.adherence != dsl::Adherence::nonadherent) continue;
    ++m.mistakes;
    std::string key = ev.segment;
    if (script) {
      if (const auto* seg = script->find_segment(ev.segment); seg && seg->skill) key = *seg->skill;
    }
    ++m.per_skill_mistakes[key];
  }
  return m;
}

}  // namespace micoach::miti
