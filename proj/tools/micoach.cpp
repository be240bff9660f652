// micoach: command-line front end for scripts, scoring, simulation and the
// HTTP service.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "micoach/api/service.hpp"
#include "micoach/curriculum/curriculum.hpp"
#include "micoach/dsl/parser.hpp"
#include "micoach/dsl/printer.hpp"
#include "micoach/miti/reliability.hpp"
#include "micoach/miti/transcript.hpp"
#include "micoach/sim/simulator.hpp"
#include "micoach/store/event_json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace micoach;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IO", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A directory or manifest.json means a curriculum; anything else is a bare
// script.
engine::Program load_program(const fs::path& path) {
  if (fs::is_directory(path) || path.extension() == ".json") return curriculum::load_curriculum(path).program;
  return engine::Program::from_source(read_file(path));
}

int cmd_validate(const fs::path& script, const std::optional<fs::path>& curriculum_dir, bool as_json) {
  const auto ast = dsl::parse(read_file(script));
  auto report = dsl::validate(ast);
  if (curriculum_dir) {
    const fs::path manifest_path =
        fs::is_directory(*curriculum_dir) ? *curriculum_dir / "manifest.json" : *curriculum_dir;
    const auto manifest = curriculum::parse_manifest(json::parse(read_file(manifest_path)),
                                                     manifest_path.parent_path());
    curriculum::check_manifest(ast, manifest);
    report.merge(curriculum::curriculum_lint(ast, manifest));
  }
  if (as_json) {
    std::cout << store::report_to_json(report).dump(2) << "\n";
  } else {
    std::cout << dsl::format_report(report);
    std::cout << report.errors.size() << " error(s), " << report.warnings.size() << " warning(s)\n";
  }
  return report.ok() ? 0 : 1;
}

int cmd_score(const fs::path& transcript, const std::optional<fs::path>& ratings) {
  const auto t = miti::transcript_from_json(json::parse(read_file(transcript)));
  json out = miti::scorecard_to_json(miti::score(t));
  if (ratings) {
    const auto m = miti::parse_ratings_csv(read_file(*ratings));
    out["reliability"] = {{"subjects", m.rows()},
                          {"raters", m.cols()},
                          {"cronbach_alpha", miti::cronbach_alpha(m)},
                          {"icc_avg_consistency", miti::icc_avg_consistency(m)}};
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct SimArgs {
  fs::path script;
  std::string mode = "roleplay";
  std::string policy = "always_adherent";
  double p = 0.3;
  std::uint64_t seed = 42;
  std::size_t runs = 1;
  std::optional<fs::path> out;
  std::optional<std::string> target;
  std::vector<std::string> choices;
  bool events = false;
  unsigned threads = 1;
};

int cmd_simulate(const SimArgs& a) {
  const auto program = load_program(a.script);
  const auto mode = engine::parse_mode(a.mode);
  if (!mode) throw Error("INVALID_ARGUMENT", "unknown mode '" + a.mode + "'");

  sim::Policy policy;
  if (a.policy == "always_adherent") {
    policy = sim::Policy::always_adherent();
  } else if (a.policy == "nonadherent_once") {
    policy = sim::Policy::nonadherent_once(a.target);
  } else if (a.policy == "random") {
    if (!(a.p >= 0.0 && a.p <= 1.0)) throw Error("INVALID_ARGUMENT", "--p must lie in [0, 1]");
    policy = sim::Policy::random(a.p, a.seed);
  } else if (a.policy == "scripted") {
    policy = sim::Policy::scripted(a.choices);
  } else {
    throw Error("INVALID_ARGUMENT", "unknown policy '" + a.policy + "'");
  }
  policy.seed = a.seed;

  const auto summary = sim::batch_stats(program, *mode, policy, a.runs, {}, a.threads);

  if (a.out) {
    std::ofstream out(*a.out, std::ios::binary);
    if (!out) throw Error("IO", "cannot write " + a.out->string());
    json header{{"prng", "xoshiro256**"},
                {"seed", a.seed},
                {"runs", a.runs},
                {"mode", a.mode},
                {"policy", sim::to_string(policy.kind)},
                {"script", program.ast().name},
                {"script_digest", program.digest()}};
    if (policy.kind == sim::Policy::Kind::random) header["p_nonadherent"] = a.p;
    out << header.dump() << "\n";
    for (const auto& r : summary.per_run) {
      json line{{"seed", r.seed},
                {"mistakes", r.mistakes},
                {"turns", r.turns},
                {"failures", r.failures},
                {"completed", r.completed}};
      if (a.events) {
        sim::Policy p = policy;
        p.seed = r.seed;
        json evs = json::array();
        for (const auto& ev : sim::simulate(program, *mode, p).events) {
          evs.push_back(store::event_to_json(ev, store::Audience::researcher));
        }
        line["events"] = std::move(evs);
      }
      out << line.dump() << "\n";
    }
  }

  std::cout << json{{"runs", summary.runs},
                    {"mean_mistakes", summary.mean_mistakes},
                    {"sd_mistakes", summary.sd_mistakes},
                    {"mean_turns", summary.mean_turns},
                    {"sd_turns", summary.sd_turns},
                    {"completion_rate", summary.completion_rate},
                    {"failures_per_completion", summary.failures_per_completion}}
                   .dump(2)
            << "\n";
  return 0;
}

int cmd_serve(const std::string& host, int port, const fs::path& data, const fs::path& curriculum_dir) {
  api::ServiceConfig config;
  config.data_dir = data;
  config.curriculum_dir = curriculum_dir;
  if (const char* token = std::getenv("MICOACH_ADMIN_TOKEN"); token && *token) config.admin_token = token;
  api::Service service(std::move(config));
  if (!service.ready()) std::cerr << "warning: curriculum failed to load; session creation will answer 422\n";
  std::cerr << "listening on " << host << ":" << port << "\n";
  if (!api::serve(service, host, port)) {
    std::cerr << "error: cannot bind " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"micoach: scripted motivational-interviewing training"};
  app.require_subcommand(1);

  fs::path script;
  std::optional<fs::path> curriculum_dir;
  bool as_json = false;
  auto* validate = app.add_subcommand("validate", "Parse and validate a .miscript file");
  validate->add_option("script", script, "Script file")->required();
  validate->add_option("--curriculum", curriculum_dir, "Also check against a curriculum manifest");
  validate->add_flag("--json", as_json, "Print the report as JSON");

  auto* fmt = app.add_subcommand("fmt", "Print a script in canonical form");
  fmt->add_option("script", script, "Script file")->required();

  fs::path transcript;
  std::optional<fs::path> ratings;
  auto* score = app.add_subcommand("score", "Score an annotated transcript");
  score->add_option("--transcript", transcript, "Transcript JSON")->required();
  score->add_option("--ratings", ratings, "Headerless CSV of ratings (rows = subjects)");

  SimArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Run simulated trainees through a script");
  simulate->add_option("script", sim_args.script, "Script file or curriculum directory")->required();
  simulate->add_option("--mode", sim_args.mode, "didactic | roleplay | video")->capture_default_str();
  simulate->add_option("--policy", sim_args.policy, "always_adherent | nonadherent_once | random | scripted")
      ->capture_default_str();
  simulate->add_option("--p", sim_args.p, "Nonadherent probability for the random policy")->capture_default_str();
  simulate->add_option("--seed", sim_args.seed, "Seed of the first run")->capture_default_str();
  simulate->add_option("--runs", sim_args.runs, "Number of runs")->capture_default_str()->check(
      CLI::PositiveNumber);
  simulate->add_option("--out", sim_args.out, "Trace file (JSONL)");
  simulate->add_option("--target", sim_args.target, "Segment for the nonadherent_once mistake");
  simulate->add_option("--choices", sim_args.choices, "Option ids for the scripted policy")->delimiter(',');
  simulate->add_flag("--events", sim_args.events, "Include full event streams in the trace");
  simulate->add_option("--threads", sim_args.threads, "Worker threads")->capture_default_str();

  std::string host = "127.0.0.1";
  int port = 8080;
  fs::path data = "data";
  fs::path serve_curriculum = "curriculum";
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--data", data, "Data directory")->capture_default_str();
  serve->add_option("--curriculum", serve_curriculum, "Curriculum directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return cmd_validate(script, curriculum_dir, as_json);
    if (*fmt) {
      std::cout << dsl::to_source(dsl::parse(read_file(script)));
      return 0;
    }
    if (*score) return cmd_score(transcript, ratings);
    if (*simulate) return cmd_simulate(sim_args);
    if (*serve) return cmd_serve(host, port, data, serve_curriculum);
  } catch (const engine::ScriptRejected& e) {
    std::cerr << dsl::format_report(e.report());
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.code();
    if (e.location()) std::cerr << " at " << e.location()->line << ":" << e.location()->column;
    std::cerr << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
