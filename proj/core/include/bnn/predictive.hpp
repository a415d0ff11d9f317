#pragma once

#include <cstdint>
#include <vector>

#include "bnn/mlp.hpp"

namespace bnn {

/// Distribution over class labels for one input; entries sum to one.
using PredictiveDistribution = Vector;

enum class Task { Binary, Multiclass };

inline Task task_of(const Architecture& arch) { return arch.is_binary() ? Task::Binary : Task::Multiclass; }

/// Monte Carlo posterior predictive: the mean over the rows of `tail` of the
/// class probability vector at x.
PredictiveDistribution predictive_distribution(const Architecture& arch, const RowMatrix& tail, const Vector& x);

/// Row i is predictive_distribution(arch, tail, features.row(i)).
Matrix predictive_distributions(const Architecture& arch, const RowMatrix& tail, const Matrix& features);

/// Binary: 1 iff p(y = 1) >= 0.5. Multiclass: argmax, ties to the lowest index.
int classify(const PredictiveDistribution& dist, Task task);

struct PredictionReport {
  std::vector<int> truth;
  std::vector<int> predicted;
  std::vector<double> prob_predicted;
  std::vector<double> prob_true;
  /// One predictive distribution per test point.
  Matrix distributions;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

PredictionReport accuracy(const Architecture& arch, const RowMatrix& tail, const LabeledDataset& test);

/// Accuracy of the predictive built from `num_draws` i.i.d. N(0, prior_variance I) parameter draws.
PredictionReport prior_predictive(const Architecture& arch, double prior_variance, const LabeledDataset& test,
                                  std::size_t num_draws, std::uint64_t seed);
double prior_predictive_accuracy(const Architecture& arch, double prior_variance, const LabeledDataset& test,
                                 std::size_t num_draws, std::uint64_t seed);

struct GridSpec {
  double lo = -0.5;
  double hi = 1.5;
  int resolution = 22;

  /// Centre of cell i along either axis.
  double center(int i) const { return lo + (i + 0.5) * (hi - lo) / resolution; }
};

/// resolution x resolution matrix of p(y = 1 | cell centre); row r holds
/// x_2 = center(r), column c holds x_1 = center(c).
Matrix grid_predictive(const Architecture& arch, const RowMatrix& tail, const GridSpec& grid = {});

}  // namespace bnn
