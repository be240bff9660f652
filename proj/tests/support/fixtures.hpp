#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>

#include <doctest.h>

#include "micoach/engine/program.hpp"
#include "micoach/engine/session.hpp"

namespace micoach::testing {

inline const std::filesystem::path kCurriculumDir = MICOACH_CURRICULUM_DIR;

/// Bindings every generated script can render with.
inline engine::Bindings default_bindings() { return {{"place", "the pharmacy"}, {"user.first_name", "Ana"}}; }

/// Fresh, empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("micoach-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace micoach::testing

namespace doctest {
template <>
struct StringMaker<micoach::SourceLoc> {
  static String convert(const micoach::SourceLoc& loc) {
    return (std::to_string(loc.line) + ":" + std::to_string(loc.column)).c_str();
  }
};
}  // namespace doctest
