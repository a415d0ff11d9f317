#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "bnn/samplers.hpp"

namespace bnn {

/// One row per iteration, no header, %.17g values.
void write_chain_csv(const std::filesystem::path& path, const RowMatrix& draws);
RowMatrix read_chain_csv(const std::filesystem::path& path);

/// "h:mm:ss", rounding to the nearest second.
std::string format_hms(double seconds);

/// Sidecar metadata: {sampler, seed, burnin, accepted, runtime_seconds,
/// runtime, iterations, dimension, config, ...}.
nlohmann::json chain_metadata(const Chain& chain, const nlohmann::json& config);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Reads draws from `csv_path` and restores burn-in, seed and counters from the
/// metadata sidecar next to it (same stem, .json) when present.
Chain load_chain(const std::filesystem::path& csv_path);

std::filesystem::path metadata_path(const std::filesystem::path& csv_path);

}  // namespace bnn
