#include "micoach/dsl/adherent_path.hpp"

#include <algorithm>

namespace micoach::dsl {
namespace {

class PathWalker {
 public:
  PathWalker(const ScriptAST& ast, std::size_t bound) : ast_(ast), bound_(bound) {}

  void walk(const Segment& seg, std::vector<PathUtterance>& out) {
    const State* st = &seg.states.front();
    std::size_t index = 0;
    for (;;) {
      if (++steps_ > bound_) diverges(seg);
      if (index >= st->actions.size()) {
        throw Error("PATH_DIVERGES", "state '" + st->id + "' of '" + seg.id + "' ends without a transfer");
      }
      const Action& action = st->actions[index];
      if (const auto* say = std::get_if<Say>(&action)) {
        out.push_back({seg.agent, say->text});
        ++index;
      } else if (const auto* recap = std::get_if<Recap>(&action)) {
        walk(segment(recap->segment), out);
        ++index;
      } else if (const auto* call = std::get_if<Call>(&action)) {
        walk(segment(call->segment), out);
        ++index;
      } else if (const auto* go = std::get_if<Goto>(&action)) {
        st = state(seg, go->state);
        index = 0;
      } else if (std::holds_alternative<End>(action)) {
        return;
      } else {
        const MenuOption& opt = preferred_option(std::get<Menu>(action));
        out.push_back({std::string(kTraineeSpeaker), opt.label});
        switch (opt.target.kind) {
          case Target::Kind::end: return;
          case Target::Kind::fail:
            throw Error("PATH_DIVERGES", "preferred option in '" + seg.id + "' leads to failure", opt.loc);
          case Target::Kind::state:
            st = state(seg, opt.target.state);
            index = 0;
            break;
        }
      }
    }
  }

  const Segment& segment(std::string_view id) const {
    const Segment* seg = ast_.find_segment(id);
    if (!seg) throw Error("UNKNOWN_SEGMENT", "segment '" + std::string(id) + "' is not defined");
    if (seg->states.empty()) throw Error("PATH_DIVERGES", "segment '" + seg->id + "' has no states");
    return *seg;
  }

 private:
  static const State* state(const Segment& seg, const std::string& id) {
    const State* st = seg.find_state(id);
    if (!st) throw Error("PATH_DIVERGES", "state '" + id + "' is not defined in '" + seg.id + "'");
    return st;
  }

  [[noreturn]] void diverges(const Segment& seg) const {
    throw Error("PATH_DIVERGES",
                "adherent path of '" + seg.id + "' does not end within " + std::to_string(bound_) + " steps");
  }

  const ScriptAST& ast_;
  std::size_t bound_;
  std::size_t steps_ = 0;
};

}  // namespace

const MenuOption& preferred_option(const Menu& menu) {
  auto it = std::find_if(menu.options.begin(), menu.options.end(),
                         [](const MenuOption& o) { return o.tag == Adherence::adherent; });
  return it != menu.options.end() ? *it : menu.options.front();
}

std::vector<PathUtterance> adherent_path(const ScriptAST& ast, std::string_view segment, std::size_t step_bound) {
  PathWalker walker(ast, step_bound);
  const Segment& seg = walker.segment(segment);
  if (seg.kind != SegmentKind::roleplay) {
    throw Error("NOT_ROLEPLAY", "segment '" + seg.id + "' is not a role-play segment");
  }
  std::vector<PathUtterance> out;
  walker.walk(seg, out);
  return out;
}

}  // namespace micoach::dsl
