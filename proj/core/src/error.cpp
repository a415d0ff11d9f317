#include "bnn/error.hpp"

namespace bnn {

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::InvalidInput: return "invalid_input";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Numerical: return "numerical";
    case ErrorCategory::Startup: return "startup";
  }
  return "unknown";
}

}  // namespace bnn
