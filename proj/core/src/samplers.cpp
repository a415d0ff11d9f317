#include "bnn/samplers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "bnn/error.hpp"
#include "bnn/predictive.hpp"

namespace bnn {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_run(const Vector& init, std::size_t dimension, std::size_t iterations, std::size_t burnin) {
  if (static_cast<std::size_t>(init.size()) != dimension) {
    throw InvalidInput("initial state has length " + std::to_string(init.size()) + " but the target has dimension " +
                       std::to_string(dimension));
  }
  if (iterations == 0) throw InvalidInput("a chain needs at least one iteration");
  if (burnin >= iterations) throw InvalidInput("burn-in must be shorter than the chain");
}

// Accept with probability min{1, exp(log_ratio)}; a NaN ratio is a rejection.
bool accept_log(double log_ratio, Rng& rng) {
  if (!(log_ratio == log_ratio)) return false;
  if (log_ratio >= 0.0) return true;
  return std::log(uniform01(rng)) < log_ratio;
}

}  // namespace

std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::MH: return "MH";
    case SamplerKind::HMC: return "HMC";
    case SamplerKind::PP: return "PP";
  }
  return "unknown";
}

SamplerKind parse_sampler(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  for (auto kind : {SamplerKind::MH, SamplerKind::HMC, SamplerKind::PP}) {
    if (to_string(kind) == upper) return kind;
  }
  throw InvalidInput("unknown sampler '" + std::string(name) + "' (expected MH, HMC or PP)");
}

RowMatrix Chain::post_burnin() const { return draws.bottomRows(draws.rows() - static_cast<Eigen::Index>(burnin)); }

RowMatrix Chain::tail(std::size_t length) const {
  const auto rows = std::min<Eigen::Index>(draws.rows(), static_cast<Eigen::Index>(length));
  return draws.bottomRows(rows);
}

void validate(const MhConfig& config) {
  if (!(config.proposal_variance > 0.0) || !std::isfinite(config.proposal_variance)) {
    throw InvalidInput("MH proposal variance must be positive");
  }
}

void validate(const HmcConfig& config) {
  if (config.leapfrog_steps < 1) throw InvalidInput("HMC needs at least one leapfrog step");
  if (!(config.step_size > 0.0) || !std::isfinite(config.step_size)) {
    throw InvalidInput("HMC step size must be positive");
  }
}

void validate(const PpConfig& config) {
  if (config.temperatures.size() < 2) throw InvalidInput("power-posterior sampling needs at least two chains");
  for (double t : config.temperatures) {
    if (!(t >= 0.0 && t <= 1.0)) throw InvalidInput("temperatures must lie in [0, 1]");
  }
  if (config.temperatures.back() != 1.0) throw InvalidInput("the last temperature must equal 1");
  if (!(config.beta > 0.0)) throw InvalidInput("swap locality beta must be positive");
  validate(config.within_chain);
}

void validate(const SgdConfig& config) {
  if (config.epochs < 1 || config.batch_size < 1) throw InvalidInput("SGD epochs and batch size must be positive");
  if (!(config.learning_rate >= 0.0)) throw InvalidInput("SGD learning rate must be nonnegative");
  if (!(config.accept_threshold > 0.0 && config.accept_threshold < 1.0)) {
    throw InvalidInput("SGD acceptance threshold must lie in (0, 1)");
  }
  if (config.ensemble_size < 1) throw InvalidInput("ensemble size must be positive");
  if (!(config.prior_variance > 0.0)) throw InvalidInput("prior variance must be positive");
  if (config.max_sessions < 1) throw InvalidInput("max sessions must be positive");
}

LogTarget make_target(const PosteriorModel& model) {
  return LogTarget{
      model.dimension(),
      [&model](const Vector& theta) { return model.log_posterior(theta); },
      [&model](const Vector& theta) { return model.grad_log_posterior(theta); },
  };
}

TemperedTarget make_tempered_target(const PosteriorModel& model) {
  return TemperedTarget{
      model.dimension(),
      [&model](const Vector& theta) { return model.log_likelihood(theta); },
      [&model](const Vector& theta) { return model.log_prior(theta); },
  };
}

double mh_acceptance_probability(double log_current, double log_proposed) {
  if (log_proposed >= log_current) return 1.0;
  if (!std::isfinite(log_proposed)) return 0.0;
  return std::exp(log_proposed - log_current);
}

Chain mh_chain(const LogTarget& target, const Vector& init, const MhConfig& config, std::size_t iterations,
               std::uint64_t seed, std::size_t burnin) {
  validate(config);
  check_run(init, target.dimension, iterations, burnin);
  const auto start = Clock::now();

  Vector state = init;
  double log_p = target.log_density(state);
  if (!std::isfinite(log_p)) throw StartupError("MH: log-target is not finite at the initial state");

  Chain chain;
  chain.sampler = SamplerKind::MH;
  chain.seed = seed;
  chain.burnin = burnin;
  chain.draws.resize(static_cast<Eigen::Index>(iterations), init.size());

  Rng rng(seed);
  const double scale = std::sqrt(config.proposal_variance);
  for (std::size_t t = 0; t < iterations; ++t) {
    Vector proposal = state + scale * standard_normal(rng, state.size());
    const double log_q = target.log_density(proposal);
    if (std::isfinite(log_q) && accept_log(log_q - log_p, rng)) {
      state = std::move(proposal);
      log_p = log_q;
      ++chain.accepted;
    }
    chain.draws.row(static_cast<Eigen::Index>(t)) = state.transpose();
  }
  chain.runtime_seconds = seconds_since(start);
  return chain;
}

bool leapfrog(const std::function<Vector(const Vector&)>& grad_log_density, Vector& theta, Vector& momentum,
              double step_size, int steps) {
  momentum += 0.5 * step_size * grad_log_density(theta);
  for (int l = 0; l < steps; ++l) {
    theta += step_size * momentum;
    const Vector grad = grad_log_density(theta);
    if (!grad.allFinite()) return false;
    momentum += (l + 1 < steps ? step_size : 0.5 * step_size) * grad;
  }
  return theta.allFinite() && momentum.allFinite();
}

Chain hmc_chain(const LogTarget& target, const Vector& init, const HmcConfig& config, std::size_t iterations,
                std::uint64_t seed, std::size_t burnin) {
  validate(config);
  check_run(init, target.dimension, iterations, burnin);
  if (!target.gradient) throw InvalidInput("HMC needs the gradient of the log-target");
  const auto start = Clock::now();

  Vector state = init;
  double log_p = target.log_density(state);
  if (!std::isfinite(log_p) || !target.gradient(state).allFinite()) {
    throw StartupError("HMC: log-target or its gradient is not finite at the initial state");
  }

  Chain chain;
  chain.sampler = SamplerKind::HMC;
  chain.seed = seed;
  chain.burnin = burnin;
  chain.draws.resize(static_cast<Eigen::Index>(iterations), init.size());

  Rng rng(seed);
  for (std::size_t t = 0; t < iterations; ++t) {
    Vector momentum = standard_normal(rng, state.size());
    const double h0 = -log_p + 0.5 * momentum.squaredNorm();
    Vector proposal = state;
    const bool finite = leapfrog(target.gradient, proposal, momentum, config.step_size, config.leapfrog_steps);
    const double log_q = finite ? target.log_density(proposal) : -std::numeric_limits<double>::infinity();
    const double delta_h = (-log_q + 0.5 * momentum.squaredNorm()) - h0;
    if (!std::isfinite(delta_h) || std::abs(delta_h) > kDivergenceThreshold) {
      ++chain.divergences;
    } else if (accept_log(-delta_h, rng)) {
      state = std::move(proposal);
      log_p = log_q;
      ++chain.accepted;
    }
    chain.draws.row(static_cast<Eigen::Index>(t)) = state.transpose();
  }
  chain.runtime_seconds = seconds_since(start);
  return chain;
}

double pp_normalizer(int i, int m, double beta) {
  if (m < 1) throw InvalidInput("power-posterior swaps need at least two chains");
  if (i < 0 || i > m) throw InvalidInput("chain index outside 0..m");
  if (!(beta > 0.0)) throw InvalidInput("swap locality beta must be positive");
  // exp(-b)(2 - exp(-b i) - exp(-b (m - i))) / (1 - exp(-b)), via expm1 for small beta.
  return std::exp(-beta) * (-std::expm1(-beta * i) - std::expm1(-beta * (m - i))) / -std::expm1(-beta);
}

std::vector<double> pp_swap_pmf(int i, int m, double beta) {
  const double gamma = pp_normalizer(i, m, beta);
  std::vector<double> pmf(static_cast<std::size_t>(m) + 1, 0.0);
  if (gamma > std::numeric_limits<double>::min() && std::isfinite(gamma)) {
    for (int j = 0; j <= m; ++j) {
      if (j != i) pmf[j] = std::exp(-beta * std::abs(j - i)) / gamma;
    }
    return pmf;
  }
  // exp(-beta) underflows: weigh relative to the nearest neighbours instead.
  double total = 0.0;
  for (int j = 0; j <= m; ++j) {
    if (j != i) total += pmf[j] = std::exp(-beta * (std::abs(j - i) - 1));
  }
  for (double& p : pmf) p /= total;
  return pmf;
}

PpResult pp_chain(const TemperedTarget& target, const std::vector<Vector>& inits, const PpConfig& config,
                  std::size_t iterations, std::uint64_t seed, std::size_t burnin, bool record_population) {
  validate(config);
  const auto& temps = config.temperatures;
  const std::size_t count = temps.size();
  if (inits.size() != count) {
    throw InvalidInput("power-posterior sampling needs one initial state per temperature");
  }
  for (const auto& init : inits) check_run(init, target.dimension, iterations, burnin);
  const auto start = Clock::now();
  const int m = static_cast<int>(count) - 1;

  std::vector<Vector> states = inits;
  std::vector<double> log_lik(count), log_pri(count);
  for (std::size_t i = 0; i < count; ++i) {
    log_lik[i] = target.log_likelihood(states[i]);
    log_pri[i] = target.log_prior(states[i]);
    if (!std::isfinite(temps[i] * log_lik[i] + log_pri[i])) {
      throw StartupError("PP: tempered log-target is not finite at the initial state of chain " + std::to_string(i));
    }
  }

  std::vector<std::vector<double>> swap_pmfs;
  for (int i = 0; i <= m; ++i) swap_pmfs.push_back(pp_swap_pmf(i, m, config.beta));

  PpResult result;
  auto& pop = result.population;
  pop.within_accepted.assign(count, 0);
  const auto dim = static_cast<Eigen::Index>(target.dimension);
  if (record_population) {
    pop.chains.assign(count, RowMatrix(static_cast<Eigen::Index>(iterations), dim));
  }
  Chain& chain = result.chain;
  chain.sampler = SamplerKind::PP;
  chain.seed = seed;
  chain.burnin = burnin;
  chain.draws.resize(static_cast<Eigen::Index>(iterations), dim);

  Rng rng(seed);
  const double scale = std::sqrt(config.within_chain.proposal_variance);
  std::uniform_int_distribution<int> pick_chain(0, m);
  for (std::size_t t = 0; t < iterations; ++t) {
    for (std::size_t i = 0; i < count; ++i) {
      Vector proposal = states[i] + scale * standard_normal(rng, dim);
      const double lik = target.log_likelihood(proposal);
      const double pri = target.log_prior(proposal);
      const double log_ratio = temps[i] * (lik - log_lik[i]) + (pri - log_pri[i]);
      if (std::isfinite(temps[i] * lik + pri) && accept_log(log_ratio, rng)) {
        states[i] = std::move(proposal);
        log_lik[i] = lik;
        log_pri[i] = pri;
        ++pop.within_accepted[i];
      }
    }

    const int i = pick_chain(rng);
    const auto& pmf = swap_pmfs[static_cast<std::size_t>(i)];
    const int j = std::discrete_distribution<int>(pmf.begin(), pmf.end())(rng);
    ++pop.swap_attempts;
    // Priors cancel: log ratio = (t_i - t_j)(l_j - l_i).
    const double log_ratio = (temps[i] - temps[j]) * (log_lik[j] - log_lik[i]);
    if (accept_log(log_ratio, rng)) {
      std::swap(states[i], states[j]);
      std::swap(log_lik[i], log_lik[j]);
      std::swap(log_pri[i], log_pri[j]);
      ++pop.swap_accepted;
    }

    const auto row = static_cast<Eigen::Index>(t);
    chain.draws.row(row) = states[static_cast<std::size_t>(m)].transpose();
    if (record_population) {
      for (std::size_t k = 0; k < count; ++k) pop.chains[k].row(row) = states[k].transpose();
    }
  }
  chain.accepted = pop.within_accepted[static_cast<std::size_t>(m)];
  chain.swap_attempts = pop.swap_attempts;
  chain.swap_accepted = pop.swap_accepted;
  chain.runtime_seconds = seconds_since(start);
  return result;
}

Vector sgd_train(const Architecture& arch, const LabeledDataset& train, Vector init, const SgdConfig& config,
                 Rng& rng) {
  validate(config);
  check_compatible(arch, train);
  Vector theta = std::move(init);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);

  LabeledDataset minibatch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      minibatch.features.resize(static_cast<Eigen::Index>(end - begin), train.features.cols());
      minibatch.labels.resize(end - begin);
      for (std::size_t k = begin; k < end; ++k) {
        minibatch.features.row(static_cast<Eigen::Index>(k - begin)) =
            train.features.row(static_cast<Eigen::Index>(order[k]));
        minibatch.labels[k - begin] = train.labels[order[k]];
      }
      theta += config.learning_rate * grad_log_likelihood(arch, theta, minibatch);
    }
  }
  return theta;
}

SgdEnsemble sgd_ensemble(const Architecture& arch, const LabeledDataset& train, const LabeledDataset& test,
                         const SgdConfig& config, std::uint64_t seed) {
  validate(config);
  SgdEnsemble ensemble;
  Rng rng(seed);
  const auto n = static_cast<Eigen::Index>(arch.parameter_count());
  while (ensemble.solutions.size() < static_cast<std::size_t>(config.ensemble_size)) {
    if (ensemble.sessions >= static_cast<std::size_t>(config.max_sessions)) {
      throw NumericalError("SGD ensemble: only " + std::to_string(ensemble.solutions.size()) + " of " +
                           std::to_string(config.ensemble_size) + " solutions accepted after " +
                           std::to_string(ensemble.sessions) + " sessions");
    }
    ++ensemble.sessions;
    Vector theta = sgd_train(arch, train, draw_from_prior(rng, n, config.prior_variance), config, rng);
    if (!theta.allFinite()) continue;
    const RowMatrix single = theta.transpose();
    const double acc = accuracy(arch, single, test).accuracy;
    if (acc > config.accept_threshold) ensemble.solutions.push_back({std::move(theta), acc});
  }
  return ensemble;
}

}  // namespace bnn
