#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "scex/synth.hpp"

namespace scex::testing {

inline std::filesystem::path fixture_path(const std::string& rel) {
  return std::filesystem::path(SCEX_FIXTURE_DIR) / rel;
}

inline SynthResult synth_fixture(const std::string& rel) { return synthesize_drive(load_drive_spec(fixture_path(rel))); }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("scex_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace scex::testing
