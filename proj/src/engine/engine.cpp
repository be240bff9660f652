#include "micoach/engine/engine.hpp"

#include <numeric>
#include <stdexcept>

#include "micoach/engine/template.hpp"

namespace micoach::engine {
namespace {

using dsl::Adherence;
using dsl::SegmentKind;

class Machine {
 public:
  Machine(const Program& program, SessionState state, std::size_t step_bound)
      : program_(program), st_(std::move(state)), step_bound_(step_bound) {}

  Step finish() {
    check_invariants(st_);
    if ((st_.status == Status::awaiting_choice) !=
        (!events_.empty() && events_.back().kind == EventKind::MenuShown)) {
      throw std::logic_error("awaiting_choice must coincide with a trailing MenuShown");
    }
    return {std::move(st_), std::move(events_)};
  }

  void push_segment(const std::string& segment_id, std::optional<std::string> onfail) {
    const auto& seg = program_.segment(segment_id);
    st_.stack.push_back({seg.id, seg.states.front().id, 0, std::move(onfail)});
  }

  void run() {
    std::size_t steps = 0;
    while (st_.status == Status::active) {
      if (++steps > step_bound_) {
        throw Error("STEP_BOUND", "no input requested within " + std::to_string(step_bound_) + " actions");
      }
      Frame& top = st_.stack.back();
      const dsl::Segment& seg = program_.segment(top.segment);
      const dsl::State& state = program_.state(top.segment, top.state);
      if (top.action_index >= state.actions.size()) {
        throw std::logic_error("state '" + state.id + "' ran past its last action");
      }
      std::visit([&](const auto& action) { execute(seg, action); }, state.actions[top.action_index]);
    }
  }

  void choose(const std::string& option_id) {
    const dsl::Menu* menu = pending_menu(program_, st_);
    const dsl::MenuOption* picked = nullptr;
    for (const auto& opt : menu->options) {
      if (opt.id == option_id) picked = &opt;
    }
    if (!picked) throw Error("UNKNOWN_OPTION", "option '" + option_id + "' is not on the displayed menu");

    const std::string segment_id = st_.stack.back().segment;
    TurnEvent ev = make(EventKind::ChoiceMade, segment_id);
    ev.speaker = std::string(dsl::kTraineeSpeaker);
    ev.text = render(picked->label);
    ev.option_id = picked->id;
    if (picked->tag != Adherence::untagged) ev.adherence = picked->tag;
    emit(std::move(ev));
    if (picked->tag == Adherence::nonadherent) {
      ++st_.mistake_count;
      ++st_.per_segment_mistakes[segment_id];
    }
    st_.status = Status::active;
    follow(program_.segment(segment_id), *picked);
  }

 private:
  std::string render(const dsl::Template& t) const { return render_template(t, st_.bindings, st_.mode); }

  TurnEvent make(EventKind kind, const std::string& segment) const {
    TurnEvent ev;
    ev.kind = kind;
    ev.segment = segment;
    return ev;
  }

  void emit(TurnEvent ev) {
    ev.seq = ++st_.last_seq;
    if (counts_as_turn(ev.kind)) ++st_.turn_counter;
    if (st_.mode == Mode::video) ev.display_seconds = display_seconds(ev.text.value_or(""));
    events_.push_back(std::move(ev));
  }

  void utter(EventKind kind, const std::string& segment, const std::string& speaker, const dsl::Template& t) {
    TurnEvent ev = make(kind, segment);
    ev.speaker = speaker;
    ev.text = render(t);
    emit(std::move(ev));
  }

  void execute(const dsl::Segment& seg, const dsl::Say& say) {
    utter(EventKind::AgentUtterance, seg.id, seg.agent, say.text);
    ++st_.stack.back().action_index;
  }

  void execute(const dsl::Segment& seg, const dsl::Recap& recap) {
    ++st_.stack.back().action_index;
    if (st_.mode == Mode::didactic) return;
    for (const auto& line : program_.recap_path(recap.segment)) {
      utter(EventKind::RecapUtterance, seg.id, line.speaker, line.text);
    }
  }

  void execute(const dsl::Segment&, const dsl::Goto& go) {
    Frame& top = st_.stack.back();
    top.state = go.state;
    top.action_index = 0;
  }

  void execute(const dsl::Segment& seg, const dsl::End&) { complete_top(seg); }

  void execute(const dsl::Segment&, const dsl::Call& call) {
    ++st_.stack.back().action_index;
    const dsl::Segment& callee = program_.segment(call.segment);
    if (st_.mode == Mode::didactic && callee.kind == SegmentKind::roleplay) {
      emit(make(EventKind::SegmentCompleted, callee.id));
      st_.completed_segments.insert(callee.id);
      return;
    }
    push_segment(callee.id, call.onfail);
  }

  void execute(const dsl::Segment& seg, const dsl::Menu& menu) {
    if (st_.mode == Mode::video) {
      const dsl::MenuOption& opt = dsl::preferred_option(menu);
      utter(EventKind::AgentUtterance, seg.id, std::string(dsl::kTraineeSpeaker), opt.label);
      follow(seg, opt);
      return;
    }
    TurnEvent ev = make(EventKind::MenuShown, seg.id);
    std::vector<OptionView> options;
    for (const auto& opt : menu.options) options.push_back({opt.id, render(opt.label)});
    ev.options = std::move(options);
    emit(std::move(ev));
    st_.status = Status::awaiting_choice;
  }

  void follow(const dsl::Segment& seg, const dsl::MenuOption& opt) {
    switch (opt.target.kind) {
      case dsl::Target::Kind::state: {
        Frame& top = st_.stack.back();
        top.state = opt.target.state;
        top.action_index = 0;
        break;
      }
      case dsl::Target::Kind::end:
        complete_top(seg);
        break;
      case dsl::Target::Kind::fail:
        fail_top(seg);
        break;
    }
  }

  void complete_top(const dsl::Segment& seg) {
    emit(make(EventKind::SegmentCompleted, seg.id));
    st_.completed_segments.insert(seg.id);
    st_.stack.pop_back();
    if (st_.stack.empty()) {
      emit(make(EventKind::SessionCompleted, program_.ast().entry));
      st_.status = Status::completed;
    }
  }

  // The client leaves with a context-appropriate line; the caller then gets
  // control back at its onfail state so the trainee can redo the segment.
  void fail_top(const dsl::Segment& seg) {
    const Frame failed = st_.stack.back();
    if (const dsl::FailureHandler* handler = seg.handler_for(failed.state)) {
      for (const auto& line : handler->lines) utter(EventKind::FailureUtterance, seg.id, seg.agent, line);
    }
    emit(make(EventKind::SegmentFailed, seg.id));
    st_.stack.pop_back();
    if (st_.stack.empty()) {
      push_segment(seg.id, std::nullopt);
      return;
    }
    Frame& caller = st_.stack.back();
    if (failed.onfail) {
      caller.state = *failed.onfail;
      caller.action_index = 0;
    } else {
      --caller.action_index;  // re-run the call
    }
  }

  const Program& program_;
  SessionState st_;
  std::size_t step_bound_;
  std::vector<TurnEvent> events_;
};

void check_renderable(const Program& program, const Bindings& bindings, Mode mode) {
  auto check = [&](const dsl::Template& t) { render_template(t, bindings, mode); };
  for (const auto& seg : program.ast().segments) {
    for (const auto& st : seg.states) {
      for (const auto& action : st.actions) {
        if (const auto* say = std::get_if<dsl::Say>(&action)) check(say->text);
        if (const auto* menu = std::get_if<dsl::Menu>(&action)) {
          for (const auto& opt : menu->options) check(opt.label);
        }
      }
    }
    for (const auto& h : seg.failure_handlers) {
      for (const auto& line : h.lines) check(line);
    }
  }
}

}  // namespace

Step start_session(const Program& program, Mode mode, Bindings bindings, const SessionConfig& config) {
  check_renderable(program, bindings, mode);
  SessionState st;
  st.session_id = config.session_id;
  st.mode = mode;
  st.bindings = std::move(bindings);
  Machine m(program, std::move(st), config.step_bound);
  m.push_segment(program.ast().entry, std::nullopt);
  m.run();
  return m.finish();
}

Step advance(const Program& program, const SessionState& state, const std::optional<std::string>& choice,
             std::size_t step_bound) {
  switch (state.status) {
    case Status::completed:
      throw Error("ENGINE_HALTED", "session has completed");
    case Status::active:
      if (choice) throw Error("CHOICE_NOT_EXPECTED", "session is not waiting for a choice");
      break;
    case Status::awaiting_choice:
      if (!choice) throw Error("UNKNOWN_OPTION", "a menu choice is required");
      break;
  }
  Machine m(program, state, step_bound);
  if (choice) m.choose(*choice);
  m.run();
  return m.finish();
}

const dsl::Menu* pending_menu(const Program& program, const SessionState& state) {
  if (state.status != Status::awaiting_choice || state.stack.empty()) return nullptr;
  const Frame& top = state.stack.back();
  const dsl::State& st = program.state(top.segment, top.state);
  if (top.action_index >= st.actions.size()) return nullptr;
  return std::get_if<dsl::Menu>(&st.actions[top.action_index]);
}

std::vector<OptionView> pending_options(const Program& program, const SessionState& state) {
  std::vector<OptionView> out;
  if (const dsl::Menu* menu = pending_menu(program, state)) {
    for (const auto& opt : menu->options) {
      out.push_back({opt.id, render_template(opt.label, state.bindings, state.mode)});
    }
  }
  return out;
}

ProgressView session_progress(const Program& program, const SessionState& state) {
  ProgressView view;
  view.skills_total = static_cast<int>(program.skills().size());
  view.mistakes = state.mistake_count;
  view.elapsed_turns = state.turn_counter;

  auto skill_done = [&](const std::string& skill) {
    for (const auto& seg : program.ast().segments) {
      if (seg.skill == skill && !state.completed_segments.contains(seg.id)) return false;
    }
    return true;
  };
  std::optional<std::string> first_open;
  for (const auto& skill : program.skills()) {
    if (skill_done(skill)) {
      ++view.skills_completed;
    } else if (!first_open) {
      first_open = skill;
    }
  }
  for (auto it = state.stack.rbegin(); it != state.stack.rend(); ++it) {
    const auto& seg = program.segment(it->segment);
    if (seg.skill && !skill_done(*seg.skill)) {
      view.current_skill = seg.skill;
      break;
    }
  }
  if (!view.current_skill) view.current_skill = first_open;
  return view;
}

void check_invariants(const SessionState& state) {
  if (state.stack.empty() != (state.status == Status::completed)) {
    throw std::logic_error("stack must be empty exactly when the session is completed");
  }
  std::uint64_t sum = 0;
  for (const auto& [segment, count] : state.per_segment_mistakes) sum += count;
  if (sum != state.mistake_count) throw std::logic_error("mistake_count must equal the per-segment total");
}

}  // namespace micoach::engine
