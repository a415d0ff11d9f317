#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bnn::cli {

/// Environment variable naming the default output root.
inline constexpr const char* kOutputDirEnv = "BNN_MCMC_OUTPUT_DIR";

/// Entry point of the bnn-mcmc tool. Returns the process exit code: 0 on
/// success, otherwise the error category code, with a JSON error object
/// written to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bnn::cli
