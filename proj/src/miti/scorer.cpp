#include "micoach/miti/scorer.hpp"

#include <numeric>

#include "micoach/error.hpp"

namespace micoach::miti {
namespace {

bool likert(double v) { return v >= 1.0 && v <= 5.0; }

}  // namespace

void validate_transcript(const AnnotatedTranscript& t) {
  for (std::size_t i = 0; i < t.utterances.size(); ++i) {
    if (t.utterances[i].speaker == Speaker::client && t.utterances[i].code) {
      throw Error("INVALID_TRANSCRIPT", "utterance " + std::to_string(i) + " is a client utterance with a code");
    }
  }
  if (!likert(t.global_ratings.empathy) || !likert(t.global_ratings.partnership)) {
    throw Error("INVALID_TRANSCRIPT", "global ratings must lie in [1, 5]");
  }
  if (t.skill_ratings) {
    if (t.skill_ratings->size() != kSkillRatingCount) {
      throw Error("INVALID_TRANSCRIPT", "expected 6 skill ratings, got " + std::to_string(t.skill_ratings->size()));
    }
    for (double r : *t.skill_ratings) {
      if (!likert(r)) throw Error("INVALID_TRANSCRIPT", "skill ratings must lie in [1, 5]");
    }
  }
}

BehaviorCounts count_behaviors(const AnnotatedTranscript& t) {
  BehaviorCounts c;
  for (const auto& u : t.utterances) {
    if (u.speaker != Speaker::counselor || !u.code) continue;
    if (*u.code == BehaviorCode::question) ++c.questions;
    if (*u.code == BehaviorCode::reflection) ++c.reflections;
  }
  return c;
}

std::optional<double> rq_ratio(const BehaviorCounts& c) {
  if (c.questions == 0) return std::nullopt;
  return static_cast<double>(c.reflections) / static_cast<double>(c.questions);
}

double global_relational(double empathy, double partnership) {
  if (!likert(empathy) || !likert(partnership)) {
    throw Error("OUT_OF_RANGE", "empathy and partnership ratings must lie in [1, 5]");
  }
  return (empathy + partnership) / 2.0;
}

bool classify_proficiency(double global, std::optional<double> ratio) {
  return global >= kGlobalRelationalThreshold && ratio && *ratio >= kRqRatioThreshold;
}

double composite_skill_rating(std::span<const double> ratings) {
  if (ratings.size() != kSkillRatingCount) {
    throw Error("ARITY", "expected 6 skill ratings, got " + std::to_string(ratings.size()));
  }
  for (double r : ratings) {
    if (!likert(r)) throw Error("OUT_OF_RANGE", "skill ratings must lie in [1, 5]");
  }
  return std::accumulate(ratings.begin(), ratings.end(), 0.0) / static_cast<double>(ratings.size());
}

MitiScorecard score(const AnnotatedTranscript& t) {
  validate_transcript(t);
  MitiScorecard card;
  card.counts = count_behaviors(t);
  card.rq_ratio = rq_ratio(card.counts);
  card.global_relational = global_relational(t.global_ratings.empathy, t.global_ratings.partnership);
  card.proficient = classify_proficiency(card.global_relational, card.rq_ratio);
  if (t.skill_ratings) card.composite_skill_rating = composite_skill_rating(*t.skill_ratings);
  return card;
}

}  // namespace micoach::miti
