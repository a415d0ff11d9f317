#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

#include "bnn/mlp.hpp"

namespace bnn {

enum class CovarianceKind { Empirical, MINSE };

struct CovarianceEstimate {
  Matrix matrix;
  CovarianceKind kind = CovarianceKind::Empirical;
  std::size_t chain_length = 0;
  /// MINSE only: index t of the returned partial sum C_t.
  std::size_t truncation = 0;
};

/// (1/v) sum_{t < v-k} (x_t - mean)(x_{t+k} - mean)^T for draws stored one per row.
Matrix lag_autocovariance(const RowMatrix& draws, std::size_t lag);

/// Sample covariance with divisor v - 1.
CovarianceEstimate empirical_covariance(const RowMatrix& draws);

/// Multivariate initial monotone sequence estimate of the Monte Carlo
/// (asymptotic) covariance of a chain.
///
/// With Gamma_k = sym(S_{2k} + S_{2k+1}) and C_t = -S_0 + 2 sum_{k<=t} Gamma_k,
/// the sequence starts at the first positive definite C_t and extends while
/// C_{t+1} stays positive definite with det(C_{t+1}) > det(C_t). The lag scan
/// is capped at t <= v/2 - 1.
///
/// Throws InvalidInput for chains shorter than 4 draws and NumericalError for
/// zero-variance coordinates or when no positive definite C_t exists.
CovarianceEstimate minse(const RowMatrix& draws);

struct PsrfResult {
  double value = 0.0;
  std::size_t num_chains = 0;
  std::size_t chain_length = 0;
  /// W was singular and received a diagonal ridge before inversion.
  bool regularized = false;
  /// Chains whose MINSE failed and contributed their lag-0 covariance to W instead.
  std::size_t minse_fallbacks = 0;
};

/// Brooks-Gelman multivariate PSRF with the MINSE as within-chain covariance W:
/// sqrt((v-1)/v + (m+1)/m * lambda_max(W^{-1} B/v)).
PsrfResult multivariate_psrf(const std::vector<RowMatrix>& chains);

struct EssResult {
  double value = 0.0;
  std::size_t chain_length = 0;
};

/// v (det E / det C)^{1/n}, E empirical and C the MINSE, via log-determinants.
EssResult multivariate_ess(const RowMatrix& draws);

struct DiagnosticReport {
  double psrf = 0.0;
  bool psrf_regularized = false;
  std::vector<double> ess_per_chain;
  double ess_mean = 0.0;
  std::size_t v = 0;
  std::size_t m = 0;
  std::size_t n = 0;
};

/// PSRF across all chains (when there are at least two) and ESS per chain.
DiagnosticReport diagnose(const std::vector<RowMatrix>& chains);

nlohmann::json to_json(const DiagnosticReport& report);

}  // namespace bnn
