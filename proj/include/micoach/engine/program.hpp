#pragma once

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "micoach/dsl/adherent_path.hpp"
#include "micoach/dsl/ast.hpp"
#include "micoach/dsl/validator.hpp"

namespace micoach::engine {

/// Thrown when a script with validation errors is handed to the engine.
class ScriptRejected : public Error {
 public:
  explicit ScriptRejected(dsl::ValidationReport report);
  const dsl::ValidationReport& report() const { return report_; }

 private:
  dsl::ValidationReport report_;
};

/// A validated, immutable script ready for execution. Cheap to copy; copies
/// share the underlying AST and may be used from any thread.
class Program {
 public:
  /// Validates `ast`; throws ScriptRejected (code UNVALIDATED_SCRIPT) if the
  /// report has errors.
  static Program compile(dsl::ScriptAST ast);
  /// parse + compile.
  static Program from_source(std::string_view source);

  const dsl::ScriptAST& ast() const { return data_->ast; }
  const dsl::ValidationReport& report() const { return data_->report; }

  const dsl::Segment& segment(std::string_view id) const;
  const dsl::State& state(std::string_view segment_id, std::string_view state_id) const;

  /// Adherent path of a role-play segment, computed once at compile time.
  /// Rethrows the PATH_DIVERGES error for segments whose path never ends.
  const std::vector<dsl::PathUtterance>& recap_path(std::string_view segment_id) const;

  /// Distinct `skill` attributes in order of first appearance.
  const std::vector<std::string>& skills() const { return data_->skills; }

  /// FNV-1a digest of the canonical source, hex encoded.
  const std::string& digest() const { return data_->digest; }

 private:
  struct Data {
    dsl::ScriptAST ast;
    dsl::ValidationReport report;
    std::vector<std::string> skills;
    std::map<std::string, std::variant<std::vector<dsl::PathUtterance>, Error>, std::less<>> paths;
    std::string digest;
  };

  explicit Program(std::shared_ptr<const Data> data) : data_(std::move(data)) {}

  std::shared_ptr<const Data> data_;
};

}  // namespace micoach::engine
