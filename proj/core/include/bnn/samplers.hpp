#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "bnn/mlp.hpp"
#include "bnn/random.hpp"

namespace bnn {

enum class SamplerKind { MH, HMC, PP };

std::string_view to_string(SamplerKind kind);
SamplerKind parse_sampler(std::string_view name);

/// A realised Markov chain. Row t of `draws` is the state after iteration t+1.
struct Chain {
  RowMatrix draws;
  std::size_t burnin = 0;
  std::uint64_t seed = 0;
  std::size_t accepted = 0;
  SamplerKind sampler = SamplerKind::MH;
  double runtime_seconds = 0.0;
  /// HMC trajectories rejected for |dH| > kDivergenceThreshold or a non-finite H.
  std::size_t divergences = 0;
  /// Between-chain moves; PP only.
  std::size_t swap_attempts = 0;
  std::size_t swap_accepted = 0;

  std::size_t iterations() const noexcept { return static_cast<std::size_t>(draws.rows()); }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(draws.cols()); }
  double acceptance_rate() const noexcept {
    return iterations() ? static_cast<double>(accepted) / static_cast<double>(iterations()) : 0.0;
  }
  RowMatrix post_burnin() const;
  /// The last `length` iterations (all of them if the chain is shorter).
  RowMatrix tail(std::size_t length) const;
};

struct MhConfig {
  /// lambda in the proposal covariance lambda * I.
  double proposal_variance = 0.01;
};

struct HmcConfig {
  int leapfrog_steps = 10;
  double step_size = 0.01;
};

struct PpConfig {
  std::vector<double> temperatures;
  double beta = 0.5;
  MhConfig within_chain;
};

struct SgdConfig {
  int epochs = 2000;
  int batch_size = 50;
  double learning_rate = 0.002;
  double accept_threshold = 0.85;
  int ensemble_size = 1000;
  double prior_variance = 10.0;
  int max_sessions = 100000;
};

void validate(const MhConfig& config);
void validate(const HmcConfig& config);
void validate(const PpConfig& config);
void validate(const SgdConfig& config);

/// Unnormalised log-density over R^dimension. `gradient` is only needed by HMC.
struct LogTarget {
  std::size_t dimension = 0;
  std::function<double(const Vector&)> log_density;
  std::function<Vector(const Vector&)> gradient;
};

/// p^t(theta) = exp(t * log_likelihood(theta) + log_prior(theta)).
struct TemperedTarget {
  std::size_t dimension = 0;
  std::function<double(const Vector&)> log_likelihood;
  std::function<double(const Vector&)> log_prior;
};

/// The returned targets reference `model`, which must outlive them.
LogTarget make_target(const PosteriorModel& model);
TemperedTarget make_tempered_target(const PosteriorModel& model);

/// min{1, exp(log_proposed - log_current)}; exactly 1 whenever log_proposed >= log_current.
double mh_acceptance_probability(double log_current, double log_proposed);

/// Random-walk Metropolis with proposal N(theta, lambda I).
Chain mh_chain(const LogTarget& target, const Vector& init, const MhConfig& config, std::size_t iterations,
               std::uint64_t seed, std::size_t burnin = 0);

inline constexpr double kDivergenceThreshold = 1000.0;

/// Runs `steps` leapfrog steps of size `step_size` for H = -log p + |r|^2 / 2,
/// updating theta and momentum in place. Returns false if a non-finite value
/// appears along the trajectory.
bool leapfrog(const std::function<Vector(const Vector&)>& grad_log_density, Vector& theta, Vector& momentum,
              double step_size, int steps);

/// HMC with identity mass matrix; momentum is refreshed every iteration.
Chain hmc_chain(const LogTarget& target, const Vector& init, const HmcConfig& config, std::size_t iterations,
                std::uint64_t seed, std::size_t burnin = 0);

/// gamma_i = sum over j != i of exp(-beta |j - i|), in closed form.
double pp_normalizer(int i, int m, double beta);

/// Probabilities of proposing chain j (index j of the result) for a swap with
/// chain i; entry i is zero.
std::vector<double> pp_swap_pmf(int i, int m, double beta);

struct PopulationRecord {
  /// One trajectory per temperature, in schedule order. Empty unless recorded.
  std::vector<RowMatrix> chains;
  std::vector<std::size_t> within_accepted;
  std::size_t swap_attempts = 0;
  std::size_t swap_accepted = 0;
};

struct PpResult {
  /// Trajectory of the t = 1 chain.
  Chain chain;
  PopulationRecord population;
};

/// Power-posterior sampling: one within-chain MH step per temperature, then one
/// swap attempt between chain i ~ U{0..m} and j ~ pp_swap_pmf(i).
PpResult pp_chain(const TemperedTarget& target, const std::vector<Vector>& inits, const PpConfig& config,
                  std::size_t iterations, std::uint64_t seed, std::size_t burnin = 0,
                  bool record_population = true);

struct SgdSolution {
  Vector theta;
  double test_accuracy = 0.0;
};

struct SgdEnsemble {
  std::vector<SgdSolution> solutions;
  std::size_t sessions = 0;
};

/// One SGD session: `epochs` passes over shuffled minibatches, ascending the
/// summed minibatch log-likelihood.
Vector sgd_train(const Architecture& arch, const LabeledDataset& train, Vector init, const SgdConfig& config,
                 Rng& rng);

/// Repeats sessions from prior draws until `ensemble_size` solutions have test
/// accuracy above `accept_threshold`. Throws NumericalError after `max_sessions`.
SgdEnsemble sgd_ensemble(const Architecture& arch, const LabeledDataset& train, const LabeledDataset& test,
                         const SgdConfig& config, std::uint64_t seed);

}  // namespace bnn
