#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace bnn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Event probabilities are clamped to [kProbabilityFloor, 1 - kProbabilityFloor]
/// before logs are taken, so log-likelihoods stay finite.
inline constexpr double kProbabilityFloor = 1e-12;

enum class Activation { Sigmoid, Softmax, Identity, Tanh, ReLU };

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view name);

/// Layer widths of an MLP plus its activations.
///
/// The output activation is fixed by the output width: a single output neuron
/// uses a sigmoid (binary classification), two or more use a softmax.
class Architecture {
 public:
  explicit Architecture(std::vector<int> widths, Activation hidden = Activation::Sigmoid);

  /// Accepts "2,2,1" or "MLP(2,2,1)".
  static Architecture parse(std::string_view text, Activation hidden = Activation::Sigmoid);

  const std::vector<int>& widths() const noexcept { return widths_; }
  /// Number of weight layers (input layer excluded).
  int depth() const noexcept { return static_cast<int>(widths_.size()) - 1; }
  int input_dim() const noexcept { return widths_.front(); }
  int output_dim() const noexcept { return widths_.back(); }
  int num_classes() const noexcept { return is_binary() ? 2 : output_dim(); }
  bool is_binary() const noexcept { return output_dim() == 1; }
  Activation hidden_activation() const noexcept { return hidden_; }
  Activation output_activation() const noexcept { return is_binary() ? Activation::Sigmoid : Activation::Softmax; }

  std::size_t parameter_count() const noexcept { return parameter_count_; }
  /// Offset of the row-major weight block of layer j (1-based) within theta.
  std::size_t weight_offset(int layer) const { return offsets_.at(layer - 1); }
  std::size_t bias_offset(int layer) const;

  /// "MLP(2,2,1)"
  std::string to_string() const;

  friend bool operator==(const Architecture& a, const Architecture& b) {
    return a.widths_ == b.widths_ && a.hidden_ == b.hidden_;
  }

 private:
  std::vector<int> widths_;
  Activation hidden_;
  std::vector<std::size_t> offsets_;
  std::size_t parameter_count_ = 0;
};

std::size_t parameter_count(const Architecture& arch);

enum class DatasetRole { Train, Test };

/// Features (one row per sample) with 0-based integer class labels.
struct LabeledDataset {
  Matrix features;
  std::vector<int> labels;
  DatasetRole role = DatasetRole::Train;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return labels.size(); }
  int num_features() const noexcept { return static_cast<int>(features.cols()); }
};

/// Throws InvalidInput unless features/labels agree with arch.
void check_compatible(const Architecture& arch, const LabeledDataset& data);

/// h_rho(x, theta): a one-element vector for sigmoid output, a probability
/// vector for softmax output.
Vector forward(const Architecture& arch, const Vector& theta, const Vector& x);

/// Row i of the result is forward(arch, theta, features.row(i)).
Matrix forward_batch(const Architecture& arch, const Vector& theta, const Matrix& features);

/// Class probability vector: (1 - h, h) for a sigmoid output, h otherwise.
Vector event_probabilities(const Architecture& arch, const Vector& theta, const Vector& x);
Matrix event_probabilities_batch(const Architecture& arch, const Vector& theta, const Matrix& features);

/// Sum over samples of log Pr(y_i | x_i, theta) for a sigmoid-output MLP.
double log_likelihood_binary(const Architecture& arch, const Vector& theta, const LabeledDataset& data);
/// Sum over samples of log h_{rho, y_i}(x_i, theta) for a softmax-output MLP.
double log_likelihood_multiclass(const Architecture& arch, const Vector& theta, const LabeledDataset& data);
/// Dispatches on the output width.
double log_likelihood(const Architecture& arch, const Vector& theta, const LabeledDataset& data);

/// Fully normalised log-density of N(0, prior_variance * I).
double log_prior(const Vector& theta, double prior_variance);
Vector grad_log_prior(const Vector& theta, double prior_variance);

double log_posterior(const Architecture& arch, const Vector& theta, const LabeledDataset& data,
                     double prior_variance);

/// Exact gradient by reverse-mode differentiation of the layer recursion.
Vector grad_log_likelihood(const Architecture& arch, const Vector& theta, const LabeledDataset& data);
Vector grad_log_posterior(const Architecture& arch, const Vector& theta, const LabeledDataset& data,
                          double prior_variance);

struct ValueAndGradient {
  double value;
  Vector gradient;
};

/// Log-likelihood and its gradient from a single forward/backward sweep.
ValueAndGradient log_likelihood_and_gradient(const Architecture& arch, const Vector& theta,
                                             const LabeledDataset& data);

/// Binds an architecture, a training set and an isotropic normal prior.
class PosteriorModel {
 public:
  PosteriorModel(Architecture arch, LabeledDataset data, double prior_variance);

  const Architecture& architecture() const noexcept { return arch_; }
  const LabeledDataset& data() const noexcept { return data_; }
  double prior_variance() const noexcept { return prior_variance_; }
  std::size_t dimension() const noexcept { return arch_.parameter_count(); }

  double log_likelihood(const Vector& theta) const;
  double log_prior(const Vector& theta) const;
  double log_posterior(const Vector& theta) const;
  Vector grad_log_posterior(const Vector& theta) const;

 private:
  Architecture arch_;
  LabeledDataset data_;
  double prior_variance_;
};

/// Swaps hidden neurons a and b of the given hidden layer (1-based): rows of
/// W_layer, entries of b_layer and columns of W_{layer+1}. The network function
/// is unchanged.
Vector permute_hidden_neurons(const Architecture& arch, const Vector& theta, int layer, int a, int b);

}  // namespace bnn
