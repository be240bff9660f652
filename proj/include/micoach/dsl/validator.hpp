#pragma once

#include <string>
#include <vector>

#include "micoach/dsl/ast.hpp"

namespace micoach::dsl {

struct Diagnostic {
  std::string code;  // OPTION_LIMIT, UNREACHABLE, ...
  SourceLoc location;
  std::string message;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

struct ValidationReport {
  std::vector<Diagnostic> errors;
  std::vector<Diagnostic> warnings;

  bool ok() const { return errors.empty(); }
  bool has_error(std::string_view code) const;
  bool has_warning(std::string_view code) const;

  /// Sorts both lists by (location, code, message).
  void normalize();
  void merge(const ValidationReport& other);

  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

/// Checks every structural rule the engine relies on. Never throws; the
/// report is sorted by location so identical input yields identical output.
ValidationReport validate(const ScriptAST& ast);

/// One diagnostic per line: "error 3:7 OPTION_LIMIT: ...".
std::string format_report(const ValidationReport& report);

}  // namespace micoach::dsl
