#pragma once
#include <filesystem>
#include <optional>
#include <string>

#include "polargs/core/error.h"

namespace polargs::test {

// Kind of the polargs::Error thrown by fn, or nullopt if it returns.
template <typename Fn>
std::optional<ErrorKind> ErrorKindOf(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path ScratchDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "polargs_unit" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace polargs::test
