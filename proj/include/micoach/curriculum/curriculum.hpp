#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "micoach/dsl/validator.hpp"
#include "micoach/engine/program.hpp"

namespace micoach::curriculum {

/// The six skills, in teaching order.
inline constexpr std::array<std::string_view, 6> kSkillOrder = {
    "rapport", "permission", "vaccination_status", "open_questions", "active_listening", "sharing_experiences",
};

/// Adherent-path length bounds for a single role-play, in turns.
inline constexpr std::size_t kMinRoleplayTurns = 8;
inline constexpr std::size_t kMaxRoleplayTurns = 16;
inline constexpr std::size_t kTargetTurnsPerSkill = 12;

struct SkillEntry {
  std::string id;
  std::string pedagogy;  // segment that teaches the skill
  std::string roleplay;  // segment that practices it

  friend bool operator==(const SkillEntry&, const SkillEntry&) = default;
};

struct Persona {
  std::string name;
  std::string role;

  friend bool operator==(const Persona&, const Persona&) = default;
};

struct CurriculumManifest {
  std::filesystem::path script_path;
  std::vector<SkillEntry> skills;
  std::map<std::string, Persona, std::less<>> personas;
};

struct Curriculum {
  engine::Program program;
  CurriculumManifest manifest;
};

/// Reads manifest JSON ({script, skills[], personas{}}); `script` is resolved
/// against `base_dir`. Throws Error MANIFEST_INVALID on schema problems.
CurriculumManifest parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Throws Error MANIFEST_MISMATCH if the manifest and script disagree on
/// skills, segment kinds, skill attributes or personas.
void check_manifest(const dsl::ScriptAST& ast, const CurriculumManifest& manifest);

/// Loads `<dir>/manifest.json` (or a manifest file path) and its script.
/// Throws Error IO, dsl::ParseError, engine::ScriptRejected or MANIFEST_MISMATCH.
Curriculum load_curriculum(const std::filesystem::path& path);

/// Curriculum-level rules on top of generic validation: skill order and
/// teach-then-practice pairing (errors), role-play turn budgets and
/// placeholders without fallbacks (warnings).
dsl::ValidationReport curriculum_lint(const dsl::ScriptAST& ast, const CurriculumManifest& manifest);

}  // namespace micoach::curriculum
