#include "bnn/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "bnn/error.hpp"

namespace bnn {
namespace {

RowMatrix centered(const RowMatrix& draws) {
  RowMatrix x = draws;
  x.rowwise() -= draws.colwise().mean();
  return x;
}

Matrix lag_of_centered(const RowMatrix& x, Eigen::Index lag) {
  const Eigen::Index v = x.rows();
  const Eigen::Index len = v - lag;
  Matrix s = x.topRows(len).transpose() * x.bottomRows(len);
  return s / static_cast<double>(v);
}

std::optional<double> log_det_pd(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Matrix& l = llt.matrixLLT();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    const double d = l(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
    sum += std::log(d);
  }
  return 2.0 * sum;
}

}  // namespace

Matrix lag_autocovariance(const RowMatrix& draws, std::size_t lag) {
  if (lag >= static_cast<std::size_t>(draws.rows())) {
    throw InvalidInput("lag " + std::to_string(lag) + " is not below the chain length " +
                       std::to_string(draws.rows()));
  }
  return lag_of_centered(centered(draws), static_cast<Eigen::Index>(lag));
}

CovarianceEstimate empirical_covariance(const RowMatrix& draws) {
  if (draws.rows() < 2) throw InvalidInput("empirical covariance needs at least two draws");
  const RowMatrix x = centered(draws);
  CovarianceEstimate est;
  est.matrix = (x.transpose() * x) / static_cast<double>(draws.rows() - 1);
  est.kind = CovarianceKind::Empirical;
  est.chain_length = static_cast<std::size_t>(draws.rows());
  return est;
}

CovarianceEstimate minse(const RowMatrix& draws) {
  const Eigen::Index v = draws.rows();
  if (v < 4) throw InvalidInput("MINSE needs a chain of at least 4 draws");
  const RowMatrix x = centered(draws);
  const Matrix s0 = lag_of_centered(x, 0);
  for (Eigen::Index k = 0; k < s0.rows(); ++k) {
    if (!(s0(k, k) > 0.0)) {
      throw NumericalError("MINSE: coordinate " + std::to_string(k) + " has zero variance");
    }
  }

  const Eigen::Index cap = v / 2 - 1;
  Matrix partial = -s0;
  Matrix best;
  double best_log_det = -std::numeric_limits<double>::infinity();
  std::size_t best_t = 0;
  bool started = false;
  for (Eigen::Index t = 0; t <= cap; ++t) {
    const Matrix even = t == 0 ? s0 : lag_of_centered(x, 2 * t);
    const Matrix pair = even + lag_of_centered(x, 2 * t + 1);
    partial += pair + pair.transpose();
    const auto log_det = log_det_pd(partial);
    if (!started) {
      if (!log_det) continue;
      started = true;
    } else if (!log_det || *log_det <= best_log_det) {
      break;
    }
    best = partial;
    best_log_det = *log_det;
    best_t = static_cast<std::size_t>(t);
  }
  if (!started) throw NumericalError("MINSE: no positive definite partial sum within the lag window");

  CovarianceEstimate est;
  est.matrix = 0.5 * (best + best.transpose());
  est.kind = CovarianceKind::MINSE;
  est.chain_length = static_cast<std::size_t>(v);
  est.truncation = best_t;
  return est;
}

PsrfResult multivariate_psrf(const std::vector<RowMatrix>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) throw InvalidInput("PSRF needs at least two chains");
  const Eigen::Index v = chains.front().rows();
  const Eigen::Index n = chains.front().cols();
  for (const auto& c : chains) {
    if (c.rows() != v || c.cols() != n) throw InvalidInput("PSRF needs chains of equal shape");
  }
  if (v < 4) throw InvalidInput("PSRF needs chains of at least 4 draws");

  PsrfResult result;
  result.num_chains = m;
  result.chain_length = static_cast<std::size_t>(v);

  Matrix w = Matrix::Zero(n, n);
  Matrix means(static_cast<Eigen::Index>(m), n);
  for (std::size_t c = 0; c < m; ++c) {
    try {
      w += minse(chains[c]).matrix;
    } catch (const NumericalError&) {
      w += lag_autocovariance(chains[c], 0);
      ++result.minse_fallbacks;
    }
    means.row(static_cast<Eigen::Index>(c)) = chains[c].colwise().mean();
  }
  w /= static_cast<double>(m);

  const RowMatrix centred_means = centered(means);
  const Matrix b_over_v = (centred_means.transpose() * centred_means) / static_cast<double>(m - 1);

  Eigen::LLT<Matrix> llt(w);
  if (llt.info() != Eigen::Success) {
    const double avg = w.trace() / static_cast<double>(n);
    const double ridge = 1e-10 * (avg > 0.0 ? avg : 1.0);
    w.diagonal().array() += ridge;
    llt.compute(w);
    result.regularized = true;
    if (llt.info() != Eigen::Success) throw NumericalError("PSRF: within-chain covariance is not invertible");
  }
  // lambda_max(W^{-1} B/v) = lambda_max(L^{-1} (B/v) L^{-T}).
  const Matrix l_inv_b = llt.matrixL().solve(b_over_v);
  const Matrix sym = llt.matrixL().solve(l_inv_b.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (sym + sym.transpose()), Eigen::EigenvaluesOnly);
  const double lambda_max = eig.eigenvalues().maxCoeff();

  const double vd = static_cast<double>(v);
  const double md = static_cast<double>(m);
  result.value = std::sqrt((vd - 1.0) / vd + (md + 1.0) / md * lambda_max);
  return result;
}

EssResult multivariate_ess(const RowMatrix& draws) {
  const Eigen::Index v = draws.rows();
  const Eigen::Index n = draws.cols();
  if (v <= n) throw InvalidInput("multivariate ESS needs more draws than dimensions");
  const auto log_det_e = log_det_pd(empirical_covariance(draws).matrix);
  if (!log_det_e) throw NumericalError("multivariate ESS: empirical covariance has nonpositive determinant");
  const auto log_det_c = log_det_pd(minse(draws).matrix);
  if (!log_det_c) throw NumericalError("multivariate ESS: MINSE has nonpositive determinant");
  EssResult result;
  result.chain_length = static_cast<std::size_t>(v);
  result.value = static_cast<double>(v) * std::exp((*log_det_e - *log_det_c) / static_cast<double>(n));
  return result;
}

DiagnosticReport diagnose(const std::vector<RowMatrix>& chains) {
  if (chains.empty()) throw InvalidInput("no chains to diagnose");
  DiagnosticReport report;
  report.m = chains.size();
  report.v = static_cast<std::size_t>(chains.front().rows());
  report.n = static_cast<std::size_t>(chains.front().cols());
  if (chains.size() >= 2) {
    const auto psrf = multivariate_psrf(chains);
    report.psrf = psrf.value;
    report.psrf_regularized = psrf.regularized;
  } else {
    report.psrf = std::numeric_limits<double>::quiet_NaN();
  }
  double total = 0.0;
  for (const auto& c : chains) {
    report.ess_per_chain.push_back(multivariate_ess(c).value);
    total += report.ess_per_chain.back();
  }
  report.ess_mean = total / static_cast<double>(chains.size());
  return report;
}

nlohmann::json to_json(const DiagnosticReport& report) {
  nlohmann::json j;
  if (std::isfinite(report.psrf)) {
    j["psrf"] = report.psrf;
  } else {
    j["psrf"] = nullptr;
  }
  j["psrf_regularized"] = report.psrf_regularized;
  j["ess_per_chain"] = report.ess_per_chain;
  j["ess_mean"] = report.ess_mean;
  j["v"] = report.v;
  j["m"] = report.m;
  j["n"] = report.n;
  return j;
}

}  // namespace bnn
