#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace micoach {

struct SourceLoc {
  int line = 0;
  int column = 0;

  friend bool operator==(const SourceLoc&, const SourceLoc&) = default;
  friend auto operator<=>(const SourceLoc&, const SourceLoc&) = default;
};

// Every failure surfaced by the library carries a stable machine-readable code
// (UNKNOWN_OPTION, SEQ_GAP, ...) alongside the human message. Callers branch on
// code(); the message is for logs.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message,
        std::optional<SourceLoc> location = std::nullopt)
      : std::runtime_error(message), code_(std::move(code)), location_(location) {}

  const std::string& code() const noexcept { return code_; }
  const std::optional<SourceLoc>& location() const noexcept { return location_; }

 private:
  std::string code_;
  std::optional<SourceLoc> location_;
};

}  // namespace micoach
