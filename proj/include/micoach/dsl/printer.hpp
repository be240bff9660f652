#pragma once

#include <string>

#include "micoach/dsl/ast.hpp"

namespace micoach::dsl {

/// Canonical source form. parse(to_source(ast)) is structurally equal to any
/// `ast` that came out of parse().
std::string to_source(const ScriptAST& ast);

/// Re-escaped source spelling of a template, quotes included.
std::string quote(const Template& tmpl);

}  // namespace micoach::dsl
