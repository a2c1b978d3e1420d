#pragma once

#include <stdexcept>
#include <string>

namespace polargs {

// Failure categories. The CLI maps them onto process exit codes.
enum class ErrorKind {
  kDimension,
  kData,
  kFormat,
  kDomain,
  kConfig,
  kUsage,
  kNumerical,
  kUnavailable,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Throw(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

#define POLARGS_CHECK(cond, kind, msg)           \
  do {                                           \
    if (!(cond)) ::polargs::Throw((kind), (msg)); \
  } while (0)

}  // namespace polargs
