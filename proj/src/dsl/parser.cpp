#include "micoach/dsl/parser.hpp"

#include <array>
#include <algorithm>
#include <set>

#include "lexer.hpp"

namespace micoach::dsl {
namespace {

using detail::Token;
using detail::TokenKind;

constexpr std::array<std::string_view, 14> kKeywords = {
    "script", "version", "entry", "segment", "state", "say", "menu",
    "option", "goto", "call", "recap", "end", "failure", "for"};

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  ScriptAST script() {
    ScriptAST ast;
    expect_keyword("script");
    const Token& name = expect(TokenKind::string);
    if (name.tmpl.has_placeholders()) fail("script name cannot contain placeholders", name.loc);
    for (const auto& part : name.tmpl.parts) ast.name += part.text;
    expect_keyword("version");
    const Token& version = expect(TokenKind::integer);
    try {
      ast.version = std::stoi(version.text);
    } catch (const std::out_of_range&) {
      fail("version out of range", version.loc);
    }
    expect_keyword("entry");
    ast.entry_loc = cur().loc;
    ast.entry = identifier();

    std::set<std::string, std::less<>> seen;
    while (cur().kind != TokenKind::end_of_input) {
      if (cur().kind == TokenKind::rbrace) fail("unbalanced braces", cur().loc);
      if (cur().kind != TokenKind::identifier || cur().text != "segment") unknown_keyword("segment");
      Segment seg = segment();
      if (!seen.insert(seg.id).second) fail("duplicate segment id '" + seg.id + "'", seg.loc);
      ast.segments.push_back(std::move(seg));
    }
    return ast;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }

  const Token& advance() {
    const Token& t = toks_[pos_];
    if (t.kind != TokenKind::end_of_input) ++pos_;
    return t;
  }

  [[noreturn]] static void fail(const std::string& message, SourceLoc at) {
    throw ParseError(message, at);
  }

  [[noreturn]] void unexpected(std::string_view wanted) const {
    if (cur().kind == TokenKind::end_of_input && depth_ > 0) fail("unbalanced braces", cur().loc);
    std::string found(detail::describe(cur().kind));
    if (cur().kind == TokenKind::identifier) found = "'" + cur().text + "'";
    fail("expected " + std::string(wanted) + ", found " + found, cur().loc);
  }

  [[noreturn]] void unknown_keyword(std::string_view wanted) const {
    if (cur().kind == TokenKind::identifier) {
      fail("unknown keyword '" + cur().text + "' (expected " + std::string(wanted) + ")", cur().loc);
    }
    unexpected(wanted);
  }

  const Token& expect(TokenKind kind) {
    if (cur().kind != kind) unexpected(detail::describe(kind));
    if (kind == TokenKind::lbrace) ++depth_;
    if (kind == TokenKind::rbrace) --depth_;
    return advance();
  }

  void expect_keyword(std::string_view word) {
    if (cur().kind != TokenKind::identifier || cur().text != word) {
      unknown_keyword("'" + std::string(word) + "'");
    }
    advance();
  }

  bool accept_word(std::string_view word) {
    if (cur().kind == TokenKind::identifier && cur().text == word) {
      advance();
      return true;
    }
    return false;
  }

  std::string identifier() {
    if (cur().kind != TokenKind::identifier) unexpected("identifier");
    if (is_keyword(cur().text)) fail("expected identifier, found keyword '" + cur().text + "'", cur().loc);
    return advance().text;
  }

  Segment segment() {
    Segment seg;
    advance();  // 'segment'
    seg.loc = cur().loc;
    seg.id = identifier();

    expect(TokenKind::lparen);
    bool have_kind = false;
    bool have_agent = false;
    for (;;) {
      const SourceLoc at = cur().loc;
      const std::string key = identifier();
      expect(TokenKind::equals);
      const SourceLoc value_at = cur().loc;
      const std::string value = identifier();
      if (key == "kind") {
        if (have_kind) fail("duplicate attribute 'kind'", at);
        have_kind = true;
        if (value == "pedagogy") {
          seg.kind = SegmentKind::pedagogy;
        } else if (value == "roleplay") {
          seg.kind = SegmentKind::roleplay;
        } else {
          fail("unknown segment kind '" + value + "'", value_at);
        }
      } else if (key == "agent") {
        if (have_agent) fail("duplicate attribute 'agent'", at);
        have_agent = true;
        seg.agent = value;
      } else if (key == "skill") {
        if (seg.skill) fail("duplicate attribute 'skill'", at);
        seg.skill = value;
      } else {
        fail("unknown attribute '" + key + "'", at);
      }
      if (cur().kind == TokenKind::comma) {
        advance();
        continue;
      }
      expect(TokenKind::rparen);
      break;
    }
    if (!have_kind) fail("missing attribute 'kind'", seg.loc);
    if (!have_agent) fail("missing attribute 'agent'", seg.loc);

    expect(TokenKind::lbrace);
    std::set<std::string, std::less<>> seen;
    while (cur().kind != TokenKind::rbrace) {
      if (cur().kind == TokenKind::identifier && cur().text == "state") {
        State st = state();
        if (!seen.insert(st.id).second) fail("duplicate state id '" + st.id + "'", st.loc);
        seg.states.push_back(std::move(st));
      } else if (cur().kind == TokenKind::identifier && cur().text == "failure") {
        seg.failure_handlers.push_back(failure());
      } else {
        unknown_keyword("'state', 'failure' or '}'");
      }
    }
    expect(TokenKind::rbrace);
    return seg;
  }

  State state() {
    advance();  // 'state'
    State st;
    st.loc = cur().loc;
    st.id = identifier();
    expect(TokenKind::lbrace);
    while (cur().kind != TokenKind::rbrace) st.actions.push_back(action());
    expect(TokenKind::rbrace);
    return st;
  }

  Template template_string() { return expect(TokenKind::string).tmpl; }

  Action action() {
    const SourceLoc at = cur().loc;
    if (cur().kind != TokenKind::identifier) unexpected("action");
    const std::string word = cur().text;
    if (word == "say") {
      advance();
      return Say{template_string(), at};
    }
    if (word == "menu") {
      advance();
      return menu(at);
    }
    if (word == "goto") {
      advance();
      return Goto{identifier(), at};
    }
    if (word == "call") {
      advance();
      Call call{identifier(), std::nullopt, at};
      if (accept_word("onfail")) call.onfail = identifier();
      return call;
    }
    if (word == "recap") {
      advance();
      return Recap{identifier(), at};
    }
    if (word == "end") {
      advance();
      return End{at};
    }
    unknown_keyword("an action");
  }

  Menu menu(SourceLoc at) {
    Menu m;
    m.loc = at;
    expect(TokenKind::lbrace);
    while (cur().kind != TokenKind::rbrace) {
      if (cur().kind != TokenKind::identifier || cur().text != "option") unknown_keyword("'option'");
      MenuOption opt;
      opt.loc = cur().loc;
      advance();
      if (accept_word("adherent")) {
        opt.tag = Adherence::adherent;
      } else if (accept_word("nonadherent")) {
        opt.tag = Adherence::nonadherent;
      }
      opt.label = template_string();
      expect(TokenKind::arrow);
      if (cur().kind == TokenKind::bang_word) {
        opt.target = advance().text == "fail" ? Target::fail() : Target::end();
      } else {
        opt.target = Target::to_state(identifier());
      }
      opt.id = std::to_string(m.options.size() + 1);
      m.options.push_back(std::move(opt));
    }
    if (m.options.empty()) fail("menu requires at least one option", cur().loc);
    expect(TokenKind::rbrace);
    return m;
  }

  FailureHandler failure() {
    FailureHandler h;
    h.loc = cur().loc;
    advance();  // 'failure'
    if (accept_word("for")) {
      h.for_states.push_back(identifier());
      while (cur().kind == TokenKind::comma) {
        advance();
        h.for_states.push_back(identifier());
      }
    }
    expect(TokenKind::lbrace);
    while (cur().kind != TokenKind::rbrace) {
      expect_keyword("say");
      h.lines.push_back(template_string());
    }
    if (h.lines.empty()) fail("failure handler requires at least one say", cur().loc);
    expect(TokenKind::rbrace);
    return h;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

}  // namespace

ScriptAST parse(std::string_view source) { return Parser(detail::tokenize(source)).script(); }

}  // namespace micoach::dsl
