#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace micoach::miti {

// Basic-competence thresholds; both are inclusive minimums.
inline constexpr double kGlobalRelationalThreshold = 3.5;
inline constexpr double kRqRatioThreshold = 1.0;
inline constexpr std::size_t kSkillRatingCount = 6;

enum class Speaker { counselor, client };
enum class BehaviorCode { question, reflection, other };

struct Utterance {
  Speaker speaker = Speaker::counselor;
  std::string text;
  std::optional<BehaviorCode> code;  // counselor utterances only
};

struct GlobalRatings {
  double empathy = 0;
  double partnership = 0;
};

struct AnnotatedTranscript {
  std::vector<Utterance> utterances;
  GlobalRatings global_ratings;
  std::optional<std::vector<double>> skill_ratings;  // 6 Likert ratings when present
};

struct BehaviorCounts {
  std::uint64_t questions = 0;
  std::uint64_t reflections = 0;

  friend bool operator==(const BehaviorCounts&, const BehaviorCounts&) = default;
};

struct MitiScorecard {
  BehaviorCounts counts;
  std::optional<double> rq_ratio;  // empty when no questions were asked
  double global_relational = 0;
  bool proficient = false;
  std::optional<double> composite_skill_rating;
};

/// Throws Error INVALID_TRANSCRIPT: codes on client utterances, global
/// ratings outside [1, 5], or skill ratings of the wrong arity or range.
void validate_transcript(const AnnotatedTranscript& transcript);

BehaviorCounts count_behaviors(const AnnotatedTranscript& transcript);

/// Reflections per question. Undefined (empty) when no questions were coded:
/// never reported as 0 or infinity.
std::optional<double> rq_ratio(const BehaviorCounts& counts);

/// Mean of empathy and partnership. Throws Error OUT_OF_RANGE outside [1, 5].
double global_relational(double empathy, double partnership);

bool classify_proficiency(double global_relational, std::optional<double> rq_ratio);

/// Mean of the six skill ratings. Throws Error ARITY or OUT_OF_RANGE.
double composite_skill_rating(std::span<const double> ratings);

MitiScorecard score(const AnnotatedTranscript& transcript);

}  // namespace micoach::miti
