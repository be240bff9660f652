#include "lexer.hpp"

#include <cctype>

#include "micoach/dsl/parser.hpp"

namespace micoach::dsl::detail {
namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {
    if (src_.starts_with("\xEF\xBB\xBF")) pos_ = 3;
  }

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_trivia();
      Token tok;
      tok.loc = loc();
      if (at_end()) {
        tok.kind = TokenKind::end_of_input;
        out.push_back(std::move(tok));
        return out;
      }
      const char c = peek();
      if (ident_start(c)) {
        tok.kind = TokenKind::identifier;
        while (!at_end() && ident_char(peek())) tok.text.push_back(get());
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        tok.kind = TokenKind::integer;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) tok.text.push_back(get());
        if (!at_end() && ident_char(peek())) fail("malformed integer", loc());
      } else if (c == '"') {
        tok.kind = TokenKind::string;
        tok.tmpl = lex_template();
      } else if (c == '!') {
        get();
        tok.kind = TokenKind::bang_word;
        while (!at_end() && ident_char(peek())) tok.text.push_back(get());
        if (tok.text != "fail" && tok.text != "end") {
          fail("unknown keyword '!" + tok.text + "'", tok.loc);
        }
      } else if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
        get();
        get();
        tok.kind = TokenKind::arrow;
      } else {
        get();
        switch (c) {
          case '(': tok.kind = TokenKind::lparen; break;
          case ')': tok.kind = TokenKind::rparen; break;
          case '{': tok.kind = TokenKind::lbrace; break;
          case '}': tok.kind = TokenKind::rbrace; break;
          case ',': tok.kind = TokenKind::comma; break;
          case '=': tok.kind = TokenKind::equals; break;
          default: fail(std::string("unexpected character '") + c + "'", tok.loc);
        }
      }
      out.push_back(std::move(tok));
    }
  }

 private:
  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }
  SourceLoc loc() const { return {line_, column_}; }

  char get() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      column_ = 1;
    } else if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) {
      ++column_;  // columns count code points, not UTF-8 continuation bytes
    }
    return c;
  }

  [[noreturn]] static void fail(const std::string& message, SourceLoc at) {
    throw ParseError(message, at);
  }

  void skip_trivia() {
    while (!at_end()) {
      const char c = peek();
      if (c == '#') {
        while (!at_end() && peek() != '\n') get();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        get();
      } else {
        return;
      }
    }
  }

  // Reads one escape after a backslash; returns the literal character.
  char escape(SourceLoc string_start) {
    if (at_end() || peek() == '\n') fail("unterminated string", string_start);
    const SourceLoc at = loc();
    const char c = get();
    switch (c) {
      case '"':
      case '\\':
      case '{':
      case '}':
        return c;
      default:
        fail(std::string("invalid escape '\\") + c + "'", at);
    }
  }

  Template lex_template() {
    const SourceLoc start = loc();
    get();  // opening quote
    Template t;
    std::string literal;
    auto flush = [&] {
      if (!literal.empty()) t.parts.push_back(TemplatePart::literal(std::move(literal)));
      literal.clear();
    };
    for (;;) {
      if (at_end() || peek() == '\n') fail("unterminated string", start);
      const char c = peek();
      if (c == '"') {
        get();
        break;
      }
      if (c == '\\') {
        get();
        literal.push_back(escape(start));
      } else if (c == '{') {
        flush();
        t.parts.push_back(lex_placeholder(start));
      } else if (c == '}') {
        fail("malformed placeholder: unmatched '}'", loc());
      } else {
        literal.push_back(get());
      }
    }
    flush();
    return t;
  }

  TemplatePart lex_placeholder(SourceLoc string_start) {
    const SourceLoc open = loc();
    get();  // '{'
    std::string path;
    while (!at_end() && peek() != '|' && peek() != '}' && peek() != '"' && peek() != '\n') {
      path.push_back(get());
    }
    if (at_end() || peek() == '\n') fail("unterminated string", string_start);
    if (peek() == '"') fail("malformed placeholder: missing '}'", open);
    if (!valid_path(path)) fail("malformed placeholder '{" + path + "}'", open);
    std::optional<std::string> fallback;
    if (peek() == '|') {
      get();
      std::string fb;
      for (;;) {
        if (at_end() || peek() == '\n') fail("unterminated string", string_start);
        const char c = peek();
        if (c == '}') break;
        if (c == '"' || c == '{') fail("malformed placeholder: missing '}'", open);
        if (c == '\\') {
          get();
          fb.push_back(escape(string_start));
        } else {
          fb.push_back(get());
        }
      }
      fallback = std::move(fb);
    }
    get();  // '}'
    return TemplatePart::placeholder(std::move(path), std::move(fallback));
  }

  static bool valid_path(std::string_view path) {
    if (path.empty()) return false;
    bool segment_start = true;
    for (char c : path) {
      if (c == '.') {
        if (segment_start) return false;
        segment_start = true;
      } else if (segment_start) {
        if (!ident_start(c)) return false;
        segment_start = false;
      } else if (!ident_char(c)) {
        return false;
      }
    }
    return !segment_start;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

std::string_view describe(TokenKind kind) {
  switch (kind) {
    case TokenKind::identifier: return "identifier";
    case TokenKind::string: return "string";
    case TokenKind::integer: return "integer";
    case TokenKind::lparen: return "'('";
    case TokenKind::rparen: return "')'";
    case TokenKind::lbrace: return "'{'";
    case TokenKind::rbrace: return "'}'";
    case TokenKind::comma: return "','";
    case TokenKind::equals: return "'='";
    case TokenKind::arrow: return "'->'";
    case TokenKind::bang_word: return "'!fail' or '!end'";
    case TokenKind::end_of_input: return "end of input";
  }
  return "token";
}

}  // namespace micoach::dsl::detail
