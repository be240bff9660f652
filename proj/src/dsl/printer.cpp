#include "micoach/dsl/printer.hpp"

#include <sstream>

namespace micoach::dsl {
namespace {

void escape_into(std::string& out, std::string_view text) {
  for (char c : text) {
    if (c == '"' || c == '\\' || c == '{' || c == '}') out.push_back('\\');
    out.push_back(c);
  }
}

std::string target_spelling(const Target& t) {
  switch (t.kind) {
    case Target::Kind::fail: return "!fail";
    case Target::Kind::end: return "!end";
    case Target::Kind::state: break;
  }
  return t.state;
}

struct ActionPrinter {
  std::ostream& os;

  void operator()(const Say& a) const { os << "    say " << quote(a.text) << '\n'; }
  void operator()(const Goto& a) const { os << "    goto " << a.state << '\n'; }
  void operator()(const Recap& a) const { os << "    recap " << a.segment << '\n'; }
  void operator()(const End&) const { os << "    end\n"; }
  void operator()(const Call& a) const {
    os << "    call " << a.segment;
    if (a.onfail) os << " onfail " << *a.onfail;
    os << '\n';
  }
  void operator()(const Menu& m) const {
    os << "    menu {\n";
    for (const auto& opt : m.options) {
      os << "      option ";
      if (opt.tag != Adherence::untagged) os << to_string(opt.tag) << ' ';
      os << quote(opt.label) << " -> " << target_spelling(opt.target) << '\n';
    }
    os << "    }\n";
  }
};

}  // namespace

std::string quote(const Template& tmpl) {
  std::string out = "\"";
  for (const auto& part : tmpl.parts) {
    if (part.kind == TemplatePart::Kind::literal) {
      escape_into(out, part.text);
      continue;
    }
    out += '{';
    out += part.path;
    if (part.fallback) {
      out += '|';
      escape_into(out, *part.fallback);
    }
    out += '}';
  }
  out += '"';
  return out;
}

std::string to_source(const ScriptAST& ast) {
  std::ostringstream os;
  Template name{{TemplatePart::literal(ast.name)}};
  os << "script " << quote(name) << " version " << ast.version << " entry " << ast.entry << '\n';
  for (const auto& seg : ast.segments) {
    os << "\nsegment " << seg.id << " (kind=" << to_string(seg.kind) << ", agent=" << seg.agent;
    if (seg.skill) os << ", skill=" << *seg.skill;
    os << ") {\n";
    for (const auto& st : seg.states) {
      os << "  state " << st.id << " {\n";
      for (const auto& action : st.actions) std::visit(ActionPrinter{os}, action);
      os << "  }\n";
    }
    for (const auto& h : seg.failure_handlers) {
      os << "  failure ";
      for (std::size_t i = 0; i < h.for_states.size(); ++i) {
        os << (i == 0 ? "for " : ", ") << h.for_states[i];
      }
      if (!h.for_states.empty()) os << ' ';
      os << "{\n";
      for (const auto& line : h.lines) os << "    say " << quote(line) << '\n';
      os << "  }\n";
    }
    os << "}\n";
  }
  return os.str();
}

}  // namespace micoach::dsl
