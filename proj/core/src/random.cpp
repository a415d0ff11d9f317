#include "bnn/random.hpp"

#include <cmath>

namespace bnn {

Vector standard_normal(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
  return z;
}

Vector draw_from_prior(Rng& rng, Eigen::Index n, double prior_variance) {
  return std::sqrt(prior_variance) * standard_normal(rng, n);
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace bnn
