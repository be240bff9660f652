#include "micoach/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "micoach/sim/rng.hpp"

namespace micoach::sim {
namespace {

using dsl::Adherence;

const dsl::MenuOption* find_tagged(const dsl::Menu& menu, Adherence tag) {
  for (const auto& opt : menu.options) {
    if (opt.tag == tag) return &opt;
  }
  return nullptr;
}

class Chooser {
 public:
  explicit Chooser(const Policy& policy) : policy_(policy), rng_(policy.seed) {}

  std::optional<std::string> pick(const dsl::Menu& menu, const std::string& segment) {
    switch (policy_.kind) {
      case Policy::Kind::always_adherent:
        return dsl::preferred_option(menu).id;
      case Policy::Kind::nonadherent_once: {
        const auto* bad = find_tagged(menu, Adherence::nonadherent);
        if (!used_ && bad && (!policy_.target_segment || *policy_.target_segment == segment)) {
          used_ = true;
          return bad->id;
        }
        return dsl::preferred_option(menu).id;
      }
      case Policy::Kind::random: {
        const auto* bad = find_tagged(menu, Adherence::nonadherent);
        const auto* good = find_tagged(menu, Adherence::adherent);
        if (!bad || !good) return dsl::preferred_option(menu).id;
        return rng_.uniform01() < policy_.p_nonadherent ? bad->id : good->id;
      }
      case Policy::Kind::scripted:
        if (next_ >= policy_.choices.size()) return std::nullopt;
        return policy_.choices[next_++];
    }
    return std::nullopt;
  }

 private:
  const Policy& policy_;
  Xoshiro256 rng_;
  bool used_ = false;
  std::size_t next_ = 0;
};

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

std::string_view to_string(Policy::Kind kind) {
  switch (kind) {
    case Policy::Kind::always_adherent: return "always_adherent";
    case Policy::Kind::nonadherent_once: return "nonadherent_once";
    case Policy::Kind::random: return "random";
    case Policy::Kind::scripted: return "scripted";
  }
  return "?";
}

SimTrace simulate(const engine::Program& program, engine::Mode mode, const Policy& policy, const SimOptions& options) {
  SimTrace trace;
  trace.seed = policy.seed;
  Chooser chooser(policy);
  auto record = [&](std::vector<engine::TurnEvent>& events) {
    for (auto& ev : events) {
      if (engine::counts_as_turn(ev.kind)) {
        ++trace.per_segment_turns[ev.segment];
        const auto& skill = program.segment(ev.segment).skill;
        ++trace.per_skill_turns[skill ? *skill : ev.segment];
      }
      if (ev.kind == engine::EventKind::SegmentFailed) ++trace.failures;
      if (options.keep_events) trace.events.push_back(std::move(ev));
    }
  };

  engine::Step step;
  try {
    step = engine::start_session(program, mode, options.bindings, {"sim-" + std::to_string(policy.seed)});
    record(step.events);
    std::size_t answers = 0;
    while (step.state.status != engine::Status::completed) {
      std::optional<std::string> choice;
      if (step.state.status == engine::Status::awaiting_choice) {
        if (++answers > options.step_bound) {
          throw Error("STEP_BOUND_EXCEEDED",
                      "no completion within " + std::to_string(options.step_bound) + " answers");
        }
        choice = chooser.pick(*engine::pending_menu(program, step.state), step.state.stack.back().segment);
        if (!choice) break;  // scripted policy exhausted
      }
      step = engine::advance(program, step.state, choice);
      record(step.events);
    }
  } catch (const Error& e) {
    if (e.code() == "STEP_BOUND") throw Error("STEP_BOUND_EXCEEDED", e.what());
    throw;
  }
  trace.completed = step.state.status == engine::Status::completed;
  trace.mistakes = step.state.mistake_count;
  trace.turns = step.state.turn_counter;
  trace.final_state = std::move(step.state);
  return trace;
}

BatchSummary batch_stats(const engine::Program& program, engine::Mode mode, const Policy& policy, std::size_t n_runs,
                         const SimOptions& options, unsigned threads) {
  if (n_runs == 0) throw Error("INVALID_ARGUMENT", "n_runs must be at least 1");
  threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::min<std::size_t>(n_runs, 256)));

  SimOptions run_options = options;
  run_options.keep_events = false;
  std::vector<RunSummary> runs(n_runs);
  std::vector<std::exception_ptr> errors(n_runs);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Policy p = policy;
      p.seed = policy.seed + i;
      try {
        const SimTrace t = simulate(program, mode, p, run_options);
        runs[i] = {p.seed, t.mistakes, t.turns, t.failures, t.completed};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n_runs + threads - 1) / threads;
    for (std::size_t begin = 0; begin < n_runs; begin += chunk) {
      pool.emplace_back(work, begin, std::min(n_runs, begin + chunk));
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  BatchSummary s;
  s.runs = n_runs;
  std::vector<double> mistakes;
  std::vector<double> turns;
  std::uint64_t completed = 0;
  std::uint64_t failures = 0;
  for (const auto& r : runs) {
    mistakes.push_back(static_cast<double>(r.mistakes));
    turns.push_back(static_cast<double>(r.turns));
    completed += r.completed ? 1 : 0;
    failures += r.failures;
  }
  s.mean_mistakes = mean_of(mistakes);
  s.sd_mistakes = sd_of(mistakes, s.mean_mistakes);
  s.mean_turns = mean_of(turns);
  s.sd_turns = sd_of(turns, s.mean_turns);
  s.completion_rate = static_cast<double>(completed) / static_cast<double>(n_runs);
  s.failures_per_completion = completed ? static_cast<double>(failures) / static_cast<double>(completed) : 0.0;
  s.per_run = std::move(runs);
  return s;
}

}  // namespace micoach::sim
