#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace test_paths {

// Fresh directory below the build tree's scratch area.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::path(GAPNET_TEST_SCRATCH) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

}  // namespace test_paths
