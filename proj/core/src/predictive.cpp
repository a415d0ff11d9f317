#include "bnn/predictive.hpp"

#include "bnn/error.hpp"
#include "bnn/random.hpp"

namespace bnn {

Matrix predictive_distributions(const Architecture& arch, const RowMatrix& tail, const Matrix& features) {
  if (tail.rows() == 0) throw InvalidInput("posterior predictive needs at least one parameter draw");
  if (static_cast<std::size_t>(tail.cols()) != arch.parameter_count()) {
    throw InvalidInput("chain has " + std::to_string(tail.cols()) + " columns but " + arch.to_string() + " has " +
                       std::to_string(arch.parameter_count()) + " parameters");
  }
  Matrix sum = Matrix::Zero(features.rows(), arch.num_classes());
  for (Eigen::Index k = 0; k < tail.rows(); ++k) {
    sum += event_probabilities_batch(arch, tail.row(k).transpose(), features);
  }
  return sum / static_cast<double>(tail.rows());
}

PredictiveDistribution predictive_distribution(const Architecture& arch, const RowMatrix& tail, const Vector& x) {
  if (x.size() != arch.input_dim()) {
    throw InvalidInput("input has " + std::to_string(x.size()) + " features but " + arch.to_string() + " expects " +
                       std::to_string(arch.input_dim()));
  }
  return predictive_distributions(arch, tail, x.transpose()).row(0).transpose();
}

int classify(const PredictiveDistribution& dist, Task task) {
  if (task == Task::Binary) {
    if (dist.size() != 2) throw InvalidInput("binary classification needs a two-entry distribution");
    return dist[1] >= 0.5 ? 1 : 0;
  }
  if (dist.size() == 0) throw InvalidInput("empty predictive distribution");
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < dist.size(); ++k) {
    if (dist[k] > dist[best]) best = k;
  }
  return static_cast<int>(best);
}

namespace {

PredictionReport report_from(const Architecture& arch, Matrix distributions, const LabeledDataset& test) {
  PredictionReport report;
  report.distributions = std::move(distributions);
  report.truth = test.labels;
  const Task task = task_of(arch);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const Vector dist = report.distributions.row(row).transpose();
    const int yhat = classify(dist, task);
    report.predicted.push_back(yhat);
    report.prob_predicted.push_back(dist[yhat]);
    report.prob_true.push_back(dist[test.labels[i]]);
    if (yhat == test.labels[i]) ++report.correct;
  }
  report.accuracy = test.size() ? static_cast<double>(report.correct) / static_cast<double>(test.size()) : 0.0;
  return report;
}

}  // namespace

PredictionReport accuracy(const Architecture& arch, const RowMatrix& tail, const LabeledDataset& test) {
  check_compatible(arch, test);
  return report_from(arch, predictive_distributions(arch, tail, test.features), test);
}

PredictionReport prior_predictive(const Architecture& arch, double prior_variance, const LabeledDataset& test,
                                  std::size_t num_draws, std::uint64_t seed) {
  if (num_draws == 0) throw InvalidInput("prior predictive needs at least one draw");
  if (!(prior_variance > 0.0)) throw InvalidInput("prior variance must be positive");
  Rng rng(seed);
  const auto n = static_cast<Eigen::Index>(arch.parameter_count());
  RowMatrix draws(static_cast<Eigen::Index>(num_draws), n);
  for (Eigen::Index k = 0; k < draws.rows(); ++k) draws.row(k) = draw_from_prior(rng, n, prior_variance).transpose();
  return accuracy(arch, draws, test);
}

double prior_predictive_accuracy(const Architecture& arch, double prior_variance, const LabeledDataset& test,
                                 std::size_t num_draws, std::uint64_t seed) {
  return prior_predictive(arch, prior_variance, test, num_draws, seed).accuracy;
}

Matrix grid_predictive(const Architecture& arch, const RowMatrix& tail, const GridSpec& grid) {
  if (arch.input_dim() != 2 || !arch.is_binary()) {
    throw InvalidInput("grid predictive needs a binary model with two input features, got " + arch.to_string());
  }
  if (grid.resolution < 1 || !(grid.hi > grid.lo)) throw InvalidInput("invalid grid specification");
  const int r = grid.resolution;
  Matrix centres(r * r, 2);
  for (int row = 0; row < r; ++row) {
    for (int col = 0; col < r; ++col) {
      centres(row * r + col, 0) = grid.center(col);
      centres(row * r + col, 1) = grid.center(row);
    }
  }
  const Matrix dist = predictive_distributions(arch, tail, centres);
  Matrix out(r, r);
  for (int row = 0; row < r; ++row) {
    for (int col = 0; col < r; ++col) out(row, col) = dist(row * r + col, 1);
  }
  return out;
}

}  // namespace bnn
