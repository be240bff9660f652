#include "micoach/dsl/validator.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace micoach::dsl {
namespace {

constexpr std::size_t kRoleplayOptionLimit = 2;
constexpr std::size_t kPedagogyOptionLimit = 4;

class Validator {
 public:
  explicit Validator(const ScriptAST& ast) : ast_(ast) {}

  ValidationReport run() {
    if (!ast_.find_segment(ast_.entry)) {
      error("UNKNOWN_ENTRY", ast_.entry_loc, "entry segment '" + ast_.entry + "' is not defined");
    }
    for (std::size_t i = 0; i < ast_.segments.size(); ++i) check_segment(i);
    check_call_cycles();
    report_.normalize();
    return std::move(report_);
  }

 private:
  void error(std::string code, SourceLoc at, std::string message) {
    report_.errors.push_back({std::move(code), at, std::move(message)});
  }
  void warning(std::string code, SourceLoc at, std::string message) {
    report_.warnings.push_back({std::move(code), at, std::move(message)});
  }

  void check_segment(std::size_t index) {
    const Segment& seg = ast_.segments[index];
    if (seg.states.empty()) {
      error("EMPTY_SEGMENT", seg.loc, "segment '" + seg.id + "' has no states");
      return;
    }
    check_handlers(seg);
    for (const auto& st : seg.states) check_state(index, seg, st);
    check_reachability(seg);
  }

  void check_handlers(const Segment& seg) {
    bool have_default = false;
    std::set<std::string, std::less<>> covered;
    for (const auto& h : seg.failure_handlers) {
      if (h.is_default()) {
        if (have_default) {
          error("DUPLICATE_DEFAULT_HANDLER", h.loc,
                "segment '" + seg.id + "' has more than one default failure handler");
        }
        have_default = true;
        continue;
      }
      for (const auto& sid : h.for_states) {
        if (!seg.find_state(sid)) {
          error("DANGLING_TARGET", h.loc, "failure handler names unknown state '" + sid + "'");
        }
        if (!covered.insert(sid).second) {
          error("HANDLER_OVERLAP", h.loc, "state '" + sid + "' is covered by more than one failure handler");
        }
      }
    }
  }

  void check_state(std::size_t seg_index, const Segment& seg, const State& st) {
    bool terminated = false;
    for (const auto& action : st.actions) {
      if (terminated) {
        error("DEAD_ACTION", location_of(action), "action after a control transfer in state '" + st.id + "'");
        break;
      }
      terminated = is_terminator(action);
    }
    if (!terminated) {
      error("MISSING_TRANSFER", st.loc,
            "state '" + st.id + "' must end with menu, goto or end");
    }
    for (const auto& action : st.actions) {
      std::visit([&](const auto& a) { check_action(seg_index, seg, st, a); }, action);
    }
  }

  void check_action(std::size_t, const Segment&, const State&, const Say&) {}
  void check_action(std::size_t, const Segment&, const State&, const End&) {}

  void check_action(std::size_t, const Segment& seg, const State&, const Goto& a) {
    if (!seg.find_state(a.state)) {
      error("DANGLING_TARGET", a.loc, "goto target '" + a.state + "' is not a state of '" + seg.id + "'");
    }
  }

  void check_action(std::size_t, const Segment& seg, const State&, const Call& a) {
    if (seg.kind == SegmentKind::roleplay) {
      error("CALL_IN_ROLEPLAY", a.loc, "role-play segment '" + seg.id + "' cannot call other segments");
    }
    if (!ast_.find_segment(a.segment)) {
      error("UNKNOWN_SEGMENT", a.loc, "call target '" + a.segment + "' is not defined");
    }
    if (a.onfail && !seg.find_state(*a.onfail)) {
      error("DANGLING_TARGET", a.loc, "onfail state '" + *a.onfail + "' is not a state of '" + seg.id + "'");
    }
  }

  void check_action(std::size_t seg_index, const Segment&, const State&, const Recap& a) {
    const auto target = ast_.segment_index(a.segment);
    if (!target) {
      error("RECAP_TARGET", a.loc, "recap target '" + a.segment + "' is not defined");
    } else if (ast_.segments[*target].kind != SegmentKind::roleplay) {
      error("RECAP_TARGET", a.loc, "recap target '" + a.segment + "' is not a role-play segment");
    } else if (*target >= seg_index) {
      error("RECAP_TARGET", a.loc, "recap target '" + a.segment + "' is not defined before this segment");
    }
  }

  void check_action(std::size_t, const Segment& seg, const State& st, const Menu& m) {
    const bool roleplay = seg.kind == SegmentKind::roleplay;
    const std::size_t limit = roleplay ? kRoleplayOptionLimit : kPedagogyOptionLimit;
    if (m.options.size() > limit) {
      error("OPTION_LIMIT", m.loc,
            std::string(roleplay ? "role-play" : "pedagogy") + " menu has " + std::to_string(m.options.size()) +
                " options (limit " + std::to_string(limit) + ")");
    }
    if (roleplay) {
      const auto adherent = std::count_if(m.options.begin(), m.options.end(),
                                          [](const MenuOption& o) { return o.tag == Adherence::adherent; });
      if (adherent != 1) {
        error("ADHERENT_COUNT", m.loc,
              "role-play menu must have exactly one adherent option, found " + std::to_string(adherent));
      }
    }
    for (const auto& opt : m.options) {
      if (roleplay && opt.tag == Adherence::untagged) {
        error("UNTAGGED_OPTION", opt.loc, "role-play options must be tagged adherent or nonadherent");
      }
      if (!roleplay && opt.tag != Adherence::untagged) {
        warning("TAG_IN_PEDAGOGY", opt.loc, "adherence tag on a pedagogy option counts as a mistake when chosen");
      }
      switch (opt.target.kind) {
        case Target::Kind::state:
          if (!seg.find_state(opt.target.state)) {
            error("DANGLING_TARGET", opt.loc,
                  "option target '" + opt.target.state + "' is not a state of '" + seg.id + "'");
          } else if (roleplay && starts_with_menu(seg, opt.target.state)) {
            error("CONSECUTIVE_TRAINEE", opt.loc,
                  "option leads to another menu without an agent utterance in between");
          }
          break;
        case Target::Kind::fail:
          if (!roleplay) {
            error("FAIL_IN_PEDAGOGY", opt.loc, "only role-play options may target !fail");
          } else if (!seg.handler_for(st.id)) {
            error("NO_FAILURE_HANDLER", opt.loc,
                  "no failure handler applies to state '" + st.id + "' of '" + seg.id + "'");
          }
          if (opt.tag == Adherence::adherent) {
            error("ADHERENT_FAIL", opt.loc, "an adherent option cannot target !fail");
          }
          break;
        case Target::Kind::end:
          break;
      }
    }
  }

  // Follows gotos from `state_id` to the first thing the state says or shows.
  static bool starts_with_menu(const Segment& seg, const std::string& state_id) {
    std::set<std::string, std::less<>> seen;
    const State* st = seg.find_state(state_id);
    while (st && !st->actions.empty() && seen.insert(st->id).second) {
      const Action& first = st->actions.front();
      if (std::holds_alternative<Menu>(first)) return true;
      if (const auto* g = std::get_if<Goto>(&first)) {
        st = seg.find_state(g->state);
        continue;
      }
      return false;
    }
    return false;
  }

  void check_reachability(const Segment& seg) {
    std::set<std::string, std::less<>> seen{seg.states.front().id};
    std::vector<const State*> work{&seg.states.front()};
    auto visit = [&](const std::string& id) {
      if (const State* s = seg.find_state(id); s && seen.insert(id).second) work.push_back(s);
    };
    while (!work.empty()) {
      const State* st = work.back();
      work.pop_back();
      for (const auto& action : st->actions) {
        if (const auto* g = std::get_if<Goto>(&action)) visit(g->state);
        if (const auto* c = std::get_if<Call>(&action); c && c->onfail) visit(*c->onfail);
        if (const auto* m = std::get_if<Menu>(&action)) {
          for (const auto& opt : m->options) {
            if (opt.target.kind == Target::Kind::state) visit(opt.target.state);
          }
        }
      }
    }
    for (const auto& st : seg.states) {
      if (!seen.contains(st.id)) {
        warning("UNREACHABLE", st.loc, "state '" + st.id + "' of '" + seg.id + "' is unreachable");
      }
    }
  }

  void check_call_cycles() {
    enum class Mark { white, grey, black };
    std::vector<Mark> mark(ast_.segments.size(), Mark::white);

    // Iterative DFS; each frame remembers which call it will examine next.
    struct Frame {
      std::size_t segment;
      std::vector<const Call*> calls;
      std::size_t next = 0;
    };
    auto calls_of = [&](std::size_t i) {
      std::vector<const Call*> out;
      for (const auto& st : ast_.segments[i].states) {
        for (const auto& action : st.actions) {
          if (const auto* c = std::get_if<Call>(&action)) out.push_back(c);
        }
      }
      return out;
    };

    for (std::size_t root = 0; root < ast_.segments.size(); ++root) {
      if (mark[root] != Mark::white) continue;
      std::vector<Frame> stack{{root, calls_of(root)}};
      mark[root] = Mark::grey;
      while (!stack.empty()) {
        Frame& top = stack.back();
        if (top.next == top.calls.size()) {
          mark[top.segment] = Mark::black;
          stack.pop_back();
          continue;
        }
        const Call* call = top.calls[top.next++];
        const auto callee = ast_.segment_index(call->segment);
        if (!callee) continue;
        if (mark[*callee] == Mark::grey) {
          error("CALL_CYCLE", call->loc,
                "call from '" + ast_.segments[top.segment].id + "' to '" + call->segment + "' forms a cycle");
        } else if (mark[*callee] == Mark::white) {
          mark[*callee] = Mark::grey;
          stack.push_back({*callee, calls_of(*callee)});
        }
      }
    }
  }

  const ScriptAST& ast_;
  ValidationReport report_;
};

bool diagnostic_less(const Diagnostic& a, const Diagnostic& b) {
  return std::tie(a.location, a.code, a.message) < std::tie(b.location, b.code, b.message);
}

}  // namespace

bool ValidationReport::has_error(std::string_view code) const {
  return std::any_of(errors.begin(), errors.end(), [&](const Diagnostic& d) { return d.code == code; });
}

bool ValidationReport::has_warning(std::string_view code) const {
  return std::any_of(warnings.begin(), warnings.end(), [&](const Diagnostic& d) { return d.code == code; });
}

void ValidationReport::normalize() {
  std::stable_sort(errors.begin(), errors.end(), diagnostic_less);
  std::stable_sort(warnings.begin(), warnings.end(), diagnostic_less);
}

void ValidationReport::merge(const ValidationReport& other) {
  errors.insert(errors.end(), other.errors.begin(), other.errors.end());
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
  normalize();
}

ValidationReport validate(const ScriptAST& ast) { return Validator(ast).run(); }

std::string format_report(const ValidationReport& report) {
  std::ostringstream os;
  auto emit = [&](std::string_view severity, const Diagnostic& d) {
    os << severity << ' ' << d.location.line << ':' << d.location.column << ' ' << d.code << ": " << d.message
       << '\n';
  };
  for (const auto& d : report.errors) emit("error", d);
  for (const auto& d : report.warnings) emit("warning", d);
  return os.str();
}

}  // namespace micoach::dsl
