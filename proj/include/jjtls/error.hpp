#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jjtls {

// Machine-readable failure classes. The CLI maps each to its own exit code.
enum class ErrorCategory {
  InvalidArgument,
  Config,
  Io,
  Convergence,
  Degenerate,
};

constexpr std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::InvalidArgument: return "invalid-argument";
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Convergence: return "convergence";
    case ErrorCategory::Degenerate: return "degenerate";
  }
  return "unknown";
}

constexpr int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::InvalidArgument: return 2;
    case ErrorCategory::Config: return 3;
    case ErrorCategory::Io: return 4;
    case ErrorCategory::Convergence: return 5;
    case ErrorCategory::Degenerate: return 6;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace jjtls
