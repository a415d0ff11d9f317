#include "bnn/mlp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "bnn/error.hpp"

namespace bnn {
namespace {

using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

const double kLogFloor = std::log(kProbabilityFloor);
const double kLogCeil = std::log1p(-kProbabilityFloor);

double sigmoid(double g) {
  if (g >= 0.0) return 1.0 / (1.0 + std::exp(-g));
  const double e = std::exp(g);
  return e / (1.0 + e);
}

double log_sigmoid(double g) {
  return g < 0.0 ? g - std::log1p(std::exp(g)) : -std::log1p(std::exp(-g));
}

void apply_hidden(Activation kind, Matrix& g) {
  switch (kind) {
    case Activation::Sigmoid: g = g.unaryExpr([](double v) { return sigmoid(v); }); break;
    case Activation::Tanh: g = g.array().tanh().matrix(); break;
    case Activation::ReLU: g = g.cwiseMax(0.0); break;
    case Activation::Identity: break;
    case Activation::Softmax: throw InvalidInput("softmax is only permitted at the output layer");
  }
}

// d h / d g expressed through h (and g for ReLU).
Matrix hidden_derivative(Activation kind, const Matrix& g, const Matrix& h) {
  switch (kind) {
    case Activation::Sigmoid: return (h.array() * (1.0 - h.array())).matrix();
    case Activation::Tanh: return (1.0 - h.array().square()).matrix();
    case Activation::ReLU: return (g.array() > 0.0).cast<double>().matrix();
    case Activation::Identity: return Matrix::Ones(g.rows(), g.cols());
    case Activation::Softmax: break;
  }
  throw InvalidInput("softmax is only permitted at the output layer");
}

void softmax_rows(Matrix& g) {
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    auto row = g.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

void check_theta(const Architecture& arch, const Vector& theta) {
  if (static_cast<std::size_t>(theta.size()) != arch.parameter_count()) {
    std::ostringstream msg;
    msg << "parameter vector has length " << theta.size() << " but " << arch.to_string() << " needs "
        << arch.parameter_count();
    throw InvalidInput(msg.str());
  }
}

ConstRowMap weights(const Architecture& arch, const Vector& theta, int layer) {
  const auto& w = arch.widths();
  return ConstRowMap(theta.data() + arch.weight_offset(layer), w[layer], w[layer - 1]);
}

Eigen::Map<const Vector> biases(const Architecture& arch, const Vector& theta, int layer) {
  return Eigen::Map<const Vector>(theta.data() + arch.bias_offset(layer), arch.widths()[layer]);
}

// Pre-activations g_j and activations h_j for every layer; h_0 is the input.
// The output layer is left as raw logits in pre.back() and post.back().
struct Trace {
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
};

Trace propagate(const Architecture& arch, const Vector& theta, const Matrix& features) {
  check_theta(arch, theta);
  if (features.cols() != arch.input_dim()) {
    throw InvalidInput("input has " + std::to_string(features.cols()) + " features but " + arch.to_string() +
                       " expects " + std::to_string(arch.input_dim()));
  }
  Trace t;
  t.pre.reserve(arch.depth() + 1);
  t.post.reserve(arch.depth() + 1);
  t.pre.push_back(features);
  t.post.push_back(features);
  for (int j = 1; j <= arch.depth(); ++j) {
    Matrix g = t.post.back() * weights(arch, theta, j).transpose();
    g.rowwise() += biases(arch, theta, j).transpose();
    Matrix h = g;
    if (j < arch.depth()) apply_hidden(arch.hidden_activation(), h);
    t.pre.push_back(std::move(g));
    t.post.push_back(std::move(h));
  }
  return t;
}

double clamp_log(double lp, bool& clamped) {
  if (lp < kLogFloor) {
    clamped = true;
    return kLogFloor;
  }
  if (lp > kLogCeil) {
    clamped = true;
    return kLogCeil;
  }
  clamped = false;
  return lp;
}

// Log-likelihood plus d ell / d logits (one row per sample).
std::pair<double, Matrix> output_terms(const Architecture& arch, const Matrix& logits,
                                       const std::vector<int>& labels, bool want_delta) {
  const auto s = static_cast<Eigen::Index>(labels.size());
  Matrix delta;
  if (want_delta) delta = Matrix::Zero(s, logits.cols());
  double total = 0.0;
  bool clamped = false;
  if (arch.is_binary()) {
    for (Eigen::Index i = 0; i < s; ++i) {
      const double g = logits(i, 0);
      const bool positive = labels[i] == 1;
      total += clamp_log(log_sigmoid(positive ? g : -g), clamped);
      if (want_delta && !clamped) delta(i, 0) = positive ? sigmoid(-g) : -sigmoid(g);
    }
    return {total, std::move(delta)};
  }
  for (Eigen::Index i = 0; i < s; ++i) {
    const auto row = logits.row(i);
    const double mx = row.maxCoeff();
    const double lse = mx + std::log((row.array() - mx).exp().sum());
    const int y = labels[i];
    total += clamp_log(row(y) - lse, clamped);
    if (want_delta && !clamped) {
      delta.row(i) = -(row.array() - lse).exp().matrix();
      delta(i, y) += 1.0;
    }
  }
  return {total, std::move(delta)};
}

}  // namespace

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softmax: return "softmax";
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::ReLU: return "relu";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  for (auto kind : {Activation::Sigmoid, Activation::Softmax, Activation::Identity, Activation::Tanh,
                    Activation::ReLU}) {
    if (to_string(kind) == name) return kind;
  }
  throw InvalidInput("unknown activation '" + std::string(name) + "'");
}

Architecture::Architecture(std::vector<int> widths, Activation hidden)
    : widths_(std::move(widths)), hidden_(hidden) {
  if (widths_.size() < 3) {
    throw InvalidInput("an MLP needs an input layer, at least one hidden layer and an output layer");
  }
  if (std::any_of(widths_.begin(), widths_.end(), [](int w) { return w < 1; })) {
    throw InvalidInput("layer widths must be positive");
  }
  if (hidden_ == Activation::Softmax) throw InvalidInput("softmax is only permitted at the output layer");
  std::size_t offset = 0;
  for (std::size_t j = 1; j < widths_.size(); ++j) {
    offsets_.push_back(offset);
    offset += static_cast<std::size_t>(widths_[j]) * static_cast<std::size_t>(widths_[j - 1] + 1);
  }
  parameter_count_ = offset;
}

Architecture Architecture::parse(std::string_view text, Activation hidden) {
  std::string_view body = text;
  if (body.starts_with("MLP(") && body.ends_with(")")) body = body.substr(4, body.size() - 5);
  std::vector<int> widths;
  while (!body.empty()) {
    const auto comma = body.find(',');
    auto token = body.substr(0, comma);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    int w = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), w);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw InvalidInput("cannot parse architecture '" + std::string(text) + "'");
    }
    widths.push_back(w);
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  return Architecture(std::move(widths), hidden);
}

std::size_t Architecture::bias_offset(int layer) const {
  return weight_offset(layer) +
         static_cast<std::size_t>(widths_.at(layer)) * static_cast<std::size_t>(widths_.at(layer - 1));
}

std::string Architecture::to_string() const {
  std::string out = "MLP(";
  for (std::size_t j = 0; j < widths_.size(); ++j) {
    if (j) out += ',';
    out += std::to_string(widths_[j]);
  }
  return out + ")";
}

std::size_t parameter_count(const Architecture& arch) { return arch.parameter_count(); }

void check_compatible(const Architecture& arch, const LabeledDataset& data) {
  if (static_cast<std::size_t>(data.features.rows()) != data.labels.size()) {
    throw InvalidInput("dataset has " + std::to_string(data.features.rows()) + " feature rows but " +
                       std::to_string(data.labels.size()) + " labels");
  }
  if (data.features.rows() > 0 && data.features.cols() != arch.input_dim()) {
    throw InvalidInput("dataset has " + std::to_string(data.features.cols()) + " features but " +
                       arch.to_string() + " expects " + std::to_string(arch.input_dim()));
  }
  const int classes = arch.num_classes();
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    if (data.labels[i] < 0 || data.labels[i] >= classes) {
      throw InvalidInput("label " + std::to_string(data.labels[i]) + " at row " + std::to_string(i) +
                         " is outside 0.." + std::to_string(classes - 1));
    }
  }
}

Matrix forward_batch(const Architecture& arch, const Vector& theta, const Matrix& features) {
  Matrix out = std::move(propagate(arch, theta, features).post.back());
  if (arch.is_binary()) {
    out = out.unaryExpr([](double v) { return sigmoid(v); });
  } else {
    softmax_rows(out);
  }
  return out;
}

Vector forward(const Architecture& arch, const Vector& theta, const Vector& x) {
  if (x.size() != arch.input_dim()) {
    throw InvalidInput("input has " + std::to_string(x.size()) + " features but " + arch.to_string() +
                       " expects " + std::to_string(arch.input_dim()));
  }
  return forward_batch(arch, theta, x.transpose()).row(0).transpose();
}

Matrix event_probabilities_batch(const Architecture& arch, const Vector& theta, const Matrix& features) {
  Matrix h = forward_batch(arch, theta, features);
  if (!arch.is_binary()) return h;
  Matrix z(h.rows(), 2);
  z.col(0) = (1.0 - h.col(0).array()).matrix();
  z.col(1) = h.col(0);
  return z;
}

Vector event_probabilities(const Architecture& arch, const Vector& theta, const Vector& x) {
  if (x.size() != arch.input_dim()) {
    throw InvalidInput("input has " + std::to_string(x.size()) + " features but " + arch.to_string() +
                       " expects " + std::to_string(arch.input_dim()));
  }
  return event_probabilities_batch(arch, theta, x.transpose()).row(0).transpose();
}

double log_likelihood_binary(const Architecture& arch, const Vector& theta, const LabeledDataset& data) {
  if (!arch.is_binary()) throw InvalidInput("binary log-likelihood needs a single output neuron");
  return log_likelihood(arch, theta, data);
}

double log_likelihood_multiclass(const Architecture& arch, const Vector& theta, const LabeledDataset& data) {
  if (arch.is_binary()) throw InvalidInput("multiclass log-likelihood needs at least two output neurons");
  return log_likelihood(arch, theta, data);
}

double log_likelihood(const Architecture& arch, const Vector& theta, const LabeledDataset& data) {
  check_theta(arch, theta);
  check_compatible(arch, data);
  if (data.size() == 0) return 0.0;
  const Trace t = propagate(arch, theta, data.features);
  return output_terms(arch, t.post.back(), data.labels, false).first;
}

double log_prior(const Vector& theta, double prior_variance) {
  if (!(prior_variance > 0.0)) throw InvalidInput("prior variance must be positive");
  const double n = static_cast<double>(theta.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi * prior_variance) -
         theta.squaredNorm() / (2.0 * prior_variance);
}

Vector grad_log_prior(const Vector& theta, double prior_variance) {
  if (!(prior_variance > 0.0)) throw InvalidInput("prior variance must be positive");
  return -theta / prior_variance;
}

double log_posterior(const Architecture& arch, const Vector& theta, const LabeledDataset& data,
                     double prior_variance) {
  return log_likelihood(arch, theta, data) + log_prior(theta, prior_variance);
}

ValueAndGradient log_likelihood_and_gradient(const Architecture& arch, const Vector& theta,
                                             const LabeledDataset& data) {
  check_theta(arch, theta);
  check_compatible(arch, data);
  ValueAndGradient out{0.0, Vector::Zero(theta.size())};
  if (data.size() == 0) return out;

  const Trace t = propagate(arch, theta, data.features);
  auto [value, delta] = output_terms(arch, t.post.back(), data.labels, true);
  out.value = value;

  const auto& w = arch.widths();
  for (int j = arch.depth(); j >= 1; --j) {
    RowMap grad_w(out.gradient.data() + arch.weight_offset(j), w[j], w[j - 1]);
    grad_w.noalias() = delta.transpose() * t.post[j - 1];
    out.gradient.segment(static_cast<Eigen::Index>(arch.bias_offset(j)), w[j]) = delta.colwise().sum().transpose();
    if (j > 1) {
      Matrix back = delta * weights(arch, theta, j);
      delta = back.cwiseProduct(hidden_derivative(arch.hidden_activation(), t.pre[j - 1], t.post[j - 1]));
    }
  }
  return out;
}

Vector grad_log_likelihood(const Architecture& arch, const Vector& theta, const LabeledDataset& data) {
  return log_likelihood_and_gradient(arch, theta, data).gradient;
}

Vector grad_log_posterior(const Architecture& arch, const Vector& theta, const LabeledDataset& data,
                          double prior_variance) {
  return grad_log_likelihood(arch, theta, data) + grad_log_prior(theta, prior_variance);
}

PosteriorModel::PosteriorModel(Architecture arch, LabeledDataset data, double prior_variance)
    : arch_(std::move(arch)), data_(std::move(data)), prior_variance_(prior_variance) {
  if (!(prior_variance_ > 0.0)) throw InvalidInput("prior variance must be positive");
  check_compatible(arch_, data_);
}

double PosteriorModel::log_likelihood(const Vector& theta) const { return bnn::log_likelihood(arch_, theta, data_); }

double PosteriorModel::log_prior(const Vector& theta) const { return bnn::log_prior(theta, prior_variance_); }

double PosteriorModel::log_posterior(const Vector& theta) const {
  return log_likelihood(theta) + log_prior(theta);
}

Vector PosteriorModel::grad_log_posterior(const Vector& theta) const {
  return bnn::grad_log_posterior(arch_, theta, data_, prior_variance_);
}

Vector permute_hidden_neurons(const Architecture& arch, const Vector& theta, int layer, int a, int b) {
  check_theta(arch, theta);
  const auto& w = arch.widths();
  if (layer < 1 || layer >= arch.depth()) throw InvalidInput("layer must index a hidden layer");
  if (a < 0 || b < 0 || a >= w[layer] || b >= w[layer]) throw InvalidInput("hidden neuron index out of range");
  Vector out = theta;
  RowMap in_w(out.data() + arch.weight_offset(layer), w[layer], w[layer - 1]);
  in_w.row(a).swap(in_w.row(b));
  std::swap(out[static_cast<Eigen::Index>(arch.bias_offset(layer)) + a],
            out[static_cast<Eigen::Index>(arch.bias_offset(layer)) + b]);
  RowMap out_w(out.data() + arch.weight_offset(layer + 1), w[layer + 1], w[layer]);
  out_w.col(a).swap(out_w.col(b));
  return out;
}

}  // namespace bnn
