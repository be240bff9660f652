#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "micoach/engine/engine.hpp"

namespace micoach::sim {

/// How a simulated trainee answers menus. Pedagogy menus (no adherence tags)
/// are always answered with their first option, except by scripted policies.
struct Policy {
  enum class Kind { always_adherent, nonadherent_once, random, scripted };

  Kind kind = Kind::always_adherent;
  double p_nonadherent = 0;                    // random
  std::vector<std::string> choices;            // scripted: option ids for every menu, in order
  std::optional<std::string> target_segment;   // nonadherent_once: where to make the mistake
  std::uint64_t seed = 0;

  static Policy always_adherent() { return {}; }
  static Policy nonadherent_once(std::optional<std::string> segment = std::nullopt) {
    Policy p;
    p.kind = Kind::nonadherent_once;
    p.target_segment = std::move(segment);
    return p;
  }
  static Policy random(double p_nonadherent, std::uint64_t seed) {
    Policy p;
    p.kind = Kind::random;
    p.p_nonadherent = p_nonadherent;
    p.seed = seed;
    return p;
  }
  static Policy scripted(std::vector<std::string> choices) {
    Policy p;
    p.kind = Kind::scripted;
    p.choices = std::move(choices);
    return p;
  }
};

std::string_view to_string(Policy::Kind kind);

struct SimOptions {
  engine::Bindings bindings;
  std::size_t step_bound = 100'000;  // menu answers per run
  bool keep_events = true;
};

struct SimTrace {
  std::uint64_t seed = 0;
  std::vector<engine::TurnEvent> events;
  std::uint64_t mistakes = 0;
  std::uint64_t turns = 0;
  std::uint64_t failures = 0;  // SegmentFailed events
  bool completed = false;
  std::map<std::string, std::uint64_t> per_segment_turns;
  /// Turns grouped by the `skill` of the segment they occurred in (segment id
  /// for segments without one).
  std::map<std::string, std::uint64_t> per_skill_turns;
  engine::SessionState final_state;
};

/// Runs one session to completion (or until a scripted policy runs out of
/// choices). Throws Error STEP_BOUND_EXCEEDED past `step_bound` answers.
SimTrace simulate(const engine::Program& program, engine::Mode mode, const Policy& policy,
                  const SimOptions& options = {});

struct RunSummary {
  std::uint64_t seed = 0;
  std::uint64_t mistakes = 0;
  std::uint64_t turns = 0;
  std::uint64_t failures = 0;
  bool completed = false;
};

struct BatchSummary {
  std::size_t runs = 0;
  double mean_mistakes = 0;
  double sd_mistakes = 0;
  double mean_turns = 0;
  double sd_turns = 0;
  double completion_rate = 0;
  /// SegmentFailed events per completed run.
  double failures_per_completion = 0;
  std::vector<RunSummary> per_run;  // sorted by seed
};

/// Runs `n_runs` independent sessions with seeds policy.seed, policy.seed + 1,
/// ... split over `threads` workers. The result does not depend on `threads`.
BatchSummary batch_stats(const engine::Program& program, engine::Mode mode, const Policy& policy,
                         std::size_t n_runs, const SimOptions& options = {}, unsigned threads = 1);

}  // namespace micoach::sim
