#include "micoach/miti/transcript.hpp"

#include "micoach/error.hpp"

namespace micoach::miti {

using nlohmann::json;

AnnotatedTranscript transcript_from_json(const json& j) {
  try {
    AnnotatedTranscript t;
    for (const auto& u : j.at("utterances")) {
      Utterance utt;
      const auto speaker = u.at("speaker").get<std::string>();
      if (speaker == "counselor") {
        utt.speaker = Speaker::counselor;
      } else if (speaker == "client") {
        utt.speaker = Speaker::client;
      } else {
        throw Error("INVALID_TRANSCRIPT", "unknown speaker '" + speaker + "'");
      }
      utt.text = u.value("text", "");
      if (u.contains("code") && !u["code"].is_null()) {
        const auto code = u["code"].get<std::string>();
        if (code == "question") {
          utt.code = BehaviorCode::question;
        } else if (code == "reflection") {
          utt.code = BehaviorCode::reflection;
        } else if (code == "other") {
          utt.code = BehaviorCode::other;
        } else {
          throw Error("INVALID_TRANSCRIPT", "unknown behavior code '" + code + "'");
        }
      }
      t.utterances.push_back(std::move(utt));
    }
    const auto& g = j.at("global_ratings");
    t.global_ratings = {g.at("empathy").get<double>(), g.at("partnership").get<double>()};
    if (j.contains("skill_ratings") && !j["skill_ratings"].is_null()) {
      t.skill_ratings = j["skill_ratings"].get<std::vector<double>>();
    }
    validate_transcript(t);
    return t;
  } catch (const json::exception& e) {
    throw Error("INVALID_TRANSCRIPT", std::string("malformed transcript: ") + e.what());
  }
}

json scorecard_to_json(const MitiScorecard& card) {
  json j;
  j["counts"] = {{"questions", card.counts.questions}, {"reflections", card.counts.reflections}};
  j["rq_ratio"] = card.rq_ratio ? json(*card.rq_ratio) : json(nullptr);
  j["global_relational"] = card.global_relational;
  j["proficient"] = card.proficient;
  j["composite_skill_rating"] = card.composite_skill_rating ? json(*card.composite_skill_rating) : json(nullptr);
  j["thresholds"] = {{"global_relational", kGlobalRelationalThreshold}, {"rq_ratio", kRqRatioThreshold}};
  return j;
}

}  // namespace micoach::miti
