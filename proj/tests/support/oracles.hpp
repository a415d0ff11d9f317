// Independent reference implementations used only by tests. Nothing here
// calls into the code path it is used to check.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "bnn/mlp.hpp"

namespace bnn::oracle {

/// Layer-by-layer forward pass with explicit loops over the row-major theta layout.
inline std::vector<double> forward(const std::vector<int>& widths, bool softmax_out, const std::vector<double>& theta,
                                   const std::vector<double>& x) {
  std::vector<double> h = x;
  std::size_t pos = 0;
  const std::size_t layers = widths.size() - 1;
  for (std::size_t j = 1; j <= layers; ++j) {
    const int rows = widths[j];
    const int cols = widths[j - 1];
    std::vector<double> g(rows, 0.0);
    for (int r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (int c = 0; c < cols; ++c) acc += theta[pos + r * cols + c] * h[c];
      g[r] = acc;
    }
    pos += static_cast<std::size_t>(rows * cols);
    for (int r = 0; r < rows; ++r) g[r] += theta[pos + r];
    pos += rows;
    if (j < layers) {
      for (double& v : g) v = 1.0 / (1.0 + std::exp(-v));
    } else if (softmax_out) {
      double total = 0.0;
      for (double v : g) total += std::exp(v);
      for (double& v : g) v = std::exp(v) / total;
    } else {
      g[0] = 1.0 / (1.0 + std::exp(-g[0]));
    }
    h = g;
  }
  return h;
}

/// Per-sample brute-force log-likelihood for sigmoid hidden layers.
inline double log_likelihood(const std::vector<int>& widths, const std::vector<double>& theta,
                             const std::vector<std::vector<double>>& xs, const std::vector<int>& ys) {
  const bool softmax_out = widths.back() > 1;
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto h = forward(widths, softmax_out, theta, xs[i]);
    total += softmax_out ? std::log(h[ys[i]]) : (ys[i] == 1 ? std::log(h[0]) : std::log(1.0 - h[0]));
  }
  return total;
}

/// Central finite differences of f at x with per-coordinate step h.
inline Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                                         double h) {
  Vector grad(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vector up = x, down = x;
    up[k] += h;
    down[k] -= h;
    grad[k] = (f(up) - f(down)) / (2.0 * h);
  }
  return grad;
}

/// gamma_i by direct summation over j != i.
inline double gamma_direct(int i, int m, double beta) {
  double total = 0.0;
  for (int j = 0; j <= m; ++j) {
    if (j != i) total += std::exp(-beta * std::abs(j - i));
  }
  return total;
}

/// Scalar autocovariance at `lag` with divisor v, by explicit loops.
inline double autocovariance(const std::vector<double>& x, std::size_t lag) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double acc = 0.0;
  for (std::size_t t = 0; t + lag < x.size(); ++t) acc += (x[t] - mean) * (x[t + lag] - mean);
  return acc / static_cast<double>(x.size());
}

/// Univariate initial positive sequence estimate of the asymptotic variance:
/// skip leading non-positive partial sums, then add Gamma_k = g_{2k} + g_{2k+1}
/// while each is positive.
inline double initial_sequence_variance(const std::vector<double>& x) {
  const std::size_t v = x.size();
  const double g0 = autocovariance(x, 0);
  double sum = -g0;
  bool started = false;
  double best = 0.0;
  for (std::size_t k = 0; 2 * k + 1 < v && k + 1 <= v / 2; ++k) {
    const double gamma = autocovariance(x, 2 * k) + autocovariance(x, 2 * k + 1);
    if (!started) {
      sum += 2.0 * gamma;
      if (sum > 0.0) {
        started = true;
        best = sum;
      }
      continue;
    }
    if (!(gamma > 0.0)) break;
    sum += 2.0 * gamma;
    best = sum;
  }
  return best;
}

/// Univariate Gelman-Rubin PSRF with the initial sequence estimate as W.
inline double univariate_psrf(const std::vector<std::vector<double>>& chains) {
  const double m = static_cast<double>(chains.size());
  const double v = static_cast<double>(chains.front().size());
  double w = 0.0;
  std::vector<double> means;
  for (const auto& c : chains) {
    w += initial_sequence_variance(c);
    double mu = 0.0;
    for (double x : c) mu += x;
    means.push_back(mu / v);
  }
  w /= m;
  double grand = 0.0;
  for (double mu : means) grand += mu;
  grand /= m;
  double b_over_v = 0.0;
  for (double mu : means) b_over_v += (mu - grand) * (mu - grand);
  b_over_v /= (m - 1.0);
  return std::sqrt((v - 1.0) / v + (m + 1.0) / m * b_over_v / w);
}

/// x_t = phi x_{t-1} + e_t with e_t ~ N(0, 1), started from stationarity.
inline std::vector<double> ar1(double phi, std::size_t v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(v);
  x[0] = normal(rng) / std::sqrt(1.0 - phi * phi);
  for (std::size_t t = 1; t < v; ++t) x[t] = phi * x[t - 1] + normal(rng);
  return x;
}

inline RowMatrix iid_normal(std::size_t v, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix x(static_cast<Eigen::Index>(v), n);
  for (Eigen::Index t = 0; t < x.rows(); ++t)
    for (int k = 0; k < n; ++k) x(t, k) = normal(rng);
  return x;
}

inline RowMatrix column(const std::vector<double>& x) {
  RowMatrix m(static_cast<Eigen::Index>(x.size()), 1);
  for (std::size_t t = 0; t < x.size(); ++t) m(static_cast<Eigen::Index>(t), 0) = x[t];
  return m;
}

}  // namespace bnn::oracle
