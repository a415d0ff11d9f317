#pragma once

#include <cstdint>
#include <random>

#include "bnn/mlp.hpp"

namespace bnn {

using Rng = std::mt19937_64;

/// Private stream for chain `index` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) { return seed ^ index; }

Vector standard_normal(Rng& rng, Eigen::Index n);

/// theta ~ N(0, prior_variance * I)
Vector draw_from_prior(Rng& rng, Eigen::Index n, double prior_variance);

/// Uniform on [0, 1).
double uniform01(Rng& rng);

}  // namespace bnn
