#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bnn {

/// Coarse failure classes. The CLI maps each to a distinct exit code.
enum class ErrorCategory {
  InvalidInput = 2,  // malformed arguments, shapes or files
  Io = 3,
  Numerical = 4,     // singular matrices, non-finite targets
  Startup = 5,       // sampler could not start from the given state
};

std::string_view to_string(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error(ErrorCategory::InvalidInput, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorCategory::Numerical, what) {}
};

class StartupError : public Error {
 public:
  explicit StartupError(const std::string& what) : Error(ErrorCategory::Startup, what) {}
};

}  // namespace bnn
