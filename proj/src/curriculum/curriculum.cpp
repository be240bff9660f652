#include "micoach/curriculum/curriculum.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "micoach/dsl/adherent_path.hpp"
#include "micoach/dsl/parser.hpp"

namespace micoach::curriculum {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void mismatch(const std::string& message) { throw Error("MANIFEST_MISMATCH", message); }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IO", "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void collect_placeholders(const dsl::Template& t, SourceLoc at, const std::string& where,
                          dsl::ValidationReport& report) {
  for (const auto& part : t.parts) {
    if (part.kind == dsl::TemplatePart::Kind::placeholder && !part.fallback) {
      report.warnings.push_back(
          {"NO_FALLBACK", at, "placeholder {" + part.path + "} in " + where + " has no fallback for video mode"});
    }
  }
}

// Pedagogy segments in the order a run from the entry segment first calls them.
std::vector<std::string> call_order(const dsl::ScriptAST& ast) {
  std::vector<std::string> order;
  std::set<std::string, std::less<>> seen;
  auto visit = [&](auto&& self, const dsl::Segment& seg) -> void {
    if (!seen.insert(seg.id).second) return;
    order.push_back(seg.id);
    for (const auto& st : seg.states) {
      for (const auto& action : st.actions) {
        if (const auto* call = std::get_if<dsl::Call>(&action)) {
          if (const auto* callee = ast.find_segment(call->segment)) self(self, *callee);
        }
      }
    }
  };
  if (const auto* entry = ast.find_segment(ast.entry)) visit(visit, *entry);
  return order;
}

}  // namespace

CurriculumManifest parse_manifest(const json& j, const fs::path& base_dir) {
  try {
    CurriculumManifest m;
    m.script_path = base_dir / j.at("script").get<std::string>();
    for (const auto& s : j.at("skills")) {
      m.skills.push_back({s.at("id").get<std::string>(), s.at("pedagogy").get<std::string>(),
                          s.at("roleplay").get<std::string>()});
    }
    for (const auto& [agent, p] : j.at("personas").items()) {
      m.personas.emplace(agent, Persona{p.at("name").get<std::string>(), p.at("role").get<std::string>()});
    }
    return m;
  } catch (const json::exception& e) {
    throw Error("MANIFEST_INVALID", std::string("malformed curriculum manifest: ") + e.what());
  }
}

void check_manifest(const dsl::ScriptAST& ast, const CurriculumManifest& manifest) {
  if (manifest.skills.size() != kSkillOrder.size()) {
    mismatch("manifest lists " + std::to_string(manifest.skills.size()) + " skills; exactly " +
             std::to_string(kSkillOrder.size()) + " are required");
  }
  std::set<std::string, std::less<>> ids;
  for (const auto& skill : manifest.skills) {
    if (!ids.insert(skill.id).second) mismatch("skill '" + skill.id + "' is listed twice");
    auto check = [&](const std::string& seg_id, dsl::SegmentKind kind) {
      const dsl::Segment* seg = ast.find_segment(seg_id);
      if (!seg) mismatch("skill '" + skill.id + "' names undefined segment '" + seg_id + "'");
      if (seg->kind != kind) {
        mismatch("segment '" + seg_id + "' of skill '" + skill.id + "' must be kind=" +
                 std::string(dsl::to_string(kind)));
      }
      if (seg->skill != skill.id) {
        mismatch("segment '" + seg_id + "' must carry skill=" + skill.id);
      }
    };
    check(skill.pedagogy, dsl::SegmentKind::pedagogy);
    check(skill.roleplay, dsl::SegmentKind::roleplay);
  }
  for (const auto& seg : ast.segments) {
    if (!manifest.personas.contains(seg.agent)) {
      mismatch("agent '" + seg.agent + "' of segment '" + seg.id + "' has no persona");
    }
    if (seg.skill && !ids.contains(*seg.skill)) {
      mismatch("segment '" + seg.id + "' has skill '" + *seg.skill + "' missing from the manifest");
    }
  }
}

Curriculum load_curriculum(const fs::path& path) {
  const fs::path manifest_path = fs::is_directory(path) ? path / "manifest.json" : path;
  const json j = json::parse(read_text(manifest_path), nullptr, false);
  if (j.is_discarded()) throw Error("MANIFEST_INVALID", "'" + manifest_path.string() + "' is not valid JSON");
  CurriculumManifest manifest = parse_manifest(j, manifest_path.parent_path());
  dsl::ScriptAST ast = dsl::parse(read_text(manifest.script_path));
  check_manifest(ast, manifest);
  return {engine::Program::compile(std::move(ast)), std::move(manifest)};
}

dsl::ValidationReport curriculum_lint(const dsl::ScriptAST& ast, const CurriculumManifest& manifest) {
  dsl::ValidationReport report;

  std::vector<std::string> manifest_order;
  for (const auto& s : manifest.skills) manifest_order.push_back(s.id);
  if (!std::equal(manifest_order.begin(), manifest_order.end(), kSkillOrder.begin(), kSkillOrder.end())) {
    report.errors.push_back({"SKILL_ORDER", ast.entry_loc,
                             "skills must be taught in order: rapport, permission, vaccination_status, "
                             "open_questions, active_listening, sharing_experiences"});
  }

  std::vector<std::string> taught;
  for (const auto& seg_id : call_order(ast)) {
    for (const auto& s : manifest.skills) {
      if (s.pedagogy == seg_id) taught.push_back(s.id);
    }
  }
  if (taught != manifest_order) {
    report.errors.push_back(
        {"SKILL_ORDER", ast.entry_loc, "the entry segment does not teach the skills in manifest order"});
  }

  std::size_t total_turns = 0;
  for (const auto& skill : manifest.skills) {
    const dsl::Segment* ped = ast.find_segment(skill.pedagogy);
    const dsl::Segment* rp = ast.find_segment(skill.roleplay);
    if (!ped || !rp) continue;

    bool paired = false;
    for (const auto& st : ped->states) {
      for (const auto& action : st.actions) {
        const auto* call = std::get_if<dsl::Call>(&action);
        if (call && call->segment == rp->id && call->onfail) paired = true;
      }
    }
    if (!paired) {
      report.errors.push_back({"PAIRING", ped->loc,
                               "'" + ped->id + "' must call its role-play '" + rp->id + "' with an onfail retry state"});
    }

    try {
      const std::size_t turns = dsl::adherent_path(ast, rp->id).size();
      total_turns += turns;
      if (turns < kMinRoleplayTurns || turns > kMaxRoleplayTurns) {
        report.warnings.push_back({"TURN_BUDGET", rp->loc,
                                   "adherent path of '" + rp->id + "' has " + std::to_string(turns) +
                                       " turns, outside [" + std::to_string(kMinRoleplayTurns) + ", " +
                                       std::to_string(kMaxRoleplayTurns) + "]"});
      }
    } catch (const Error& e) {
      report.errors.push_back({e.code(), rp->loc, e.what()});
    }
  }
  const std::size_t target = kTargetTurnsPerSkill * manifest.skills.size();
  if (!manifest.skills.empty() && (2 * total_turns < target || 2 * total_turns > 3 * target)) {
    report.warnings.push_back({"TURN_BUDGET", ast.entry_loc,
                               "role-plays total " + std::to_string(total_turns) + " turns, more than 50% away from " +
                                   std::to_string(target)});
  }

  for (const auto& seg : ast.segments) {
    for (const auto& st : seg.states) {
      for (const auto& action : st.actions) {
        if (const auto* say = std::get_if<dsl::Say>(&action)) {
          collect_placeholders(say->text, say->loc, "'" + seg.id + "." + st.id + "'", report);
        }
        if (const auto* menu = std::get_if<dsl::Menu>(&action)) {
          for (const auto& opt : menu->options) {
            collect_placeholders(opt.label, opt.loc, "'" + seg.id + "." + st.id + "'", report);
          }
        }
      }
    }
    for (const auto& h : seg.failure_handlers) {
      for (const auto& line : h.lines) collect_placeholders(line, h.loc, "a failure handler of '" + seg.id + "'", report);
    }
  }

  report.normalize();
  return report;
}

}  // namespace micoach::curriculum
