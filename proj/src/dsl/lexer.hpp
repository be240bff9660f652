#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "micoach/dsl/ast.hpp"

namespace micoach::dsl::detail {

enum class TokenKind {
  identifier,
  string,
  integer,
  lparen,
  rparen,
  lbrace,
  rbrace,
  comma,
  equals,
  arrow,
  bang_word,  // !fail, !end
  end_of_input,
};

struct Token {
  TokenKind kind = TokenKind::end_of_input;
  std::string text;  // identifier / integer spelling, bang word without '!'
  Template tmpl;     // string tokens only
  SourceLoc loc;
};

/// Tokenizes a whole script. Throws ParseError on the first lexical error.
std::vector<Token> tokenize(std::string_view source);

std::string_view describe(TokenKind kind);

}  // namespace micoach::dsl::detail
