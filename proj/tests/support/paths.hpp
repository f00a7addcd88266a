#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

namespace testpaths {

inline std::string fixture(const std::string& name) {
  return std::string(MTDIFF_FIXTURE_DIR) + "/" + name;
}

inline std::string cli_binary() { return MTDIFF_CLI_BIN; }

// Fresh scratch directory under the build tree's temp space.
inline std::filesystem::path make_temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("mtdiff_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testpaths
