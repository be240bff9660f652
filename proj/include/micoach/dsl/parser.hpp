#pragma once

#include <string_view>

#include "micoach/dsl/ast.hpp"

namespace micoach::dsl {

/// Syntax error in a .miscript source, positioned at the first offending
/// token (1-based line and column, columns in code points).
class ParseError : public Error {
 public:
  ParseError(const std::string& message, SourceLoc at) : Error("PARSE_ERROR", message, at) {}

  int line() const { return location()->line; }
  int column() const { return location()->column; }
};

/// Parses a .miscript source. Accepts LF or CRLF line endings and an optional
/// UTF-8 byte-order mark. Throws ParseError.
ScriptAST parse(std::string_view source);

}  // namespace micoach::dsl
