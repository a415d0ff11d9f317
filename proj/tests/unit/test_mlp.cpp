#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "bnn/error.hpp"
#include "bnn/mlp.hpp"
#include "oracles.hpp"

using namespace bnn;

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

LabeledDataset random_dataset(std::mt19937_64& rng, const Architecture& arch, int s) {
  LabeledDataset d;
  d.features = Matrix(s, arch.input_dim());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, arch.num_classes() - 1);
  for (int i = 0; i < s; ++i) {
    for (int k = 0; k < arch.input_dim(); ++k) d.features(i, k) = normal(rng);
    d.labels.push_back(label(rng));
  }
  return d;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

TEST_CASE("parameter counts") {
  CHECK(parameter_count(Architecture({2, 2, 1})) == 9);
  CHECK(parameter_count(Architecture({8, 2, 2, 1})) == 27);
  CHECK(parameter_count(Architecture({6, 2, 2, 3})) == 29);
  CHECK(parameter_count(Architecture({1, 1, 1})) == 4);
}

TEST_CASE("architecture validation and parsing") {
  CHECK_THROWS_AS(Architecture({2, 1}), InvalidInput);
  CHECK_THROWS_AS(Architecture({2, 0, 1}), InvalidInput);
  CHECK_THROWS_AS(Architecture({2, 2, 1}, Activation::Softmax), InvalidInput);
  CHECK(Architecture::parse("MLP(6,2,2,3)") == Architecture({6, 2, 2, 3}));
  CHECK(Architecture::parse("2, 2, 1") == Architecture({2, 2, 1}));
  CHECK_THROWS_AS(Architecture::parse("MLP(2,x,1)"), InvalidInput);
  CHECK(Architecture({2, 2, 1}).output_activation() == Activation::Sigmoid);
  CHECK(Architecture({2, 2, 2}).output_activation() == Activation::Softmax);
  CHECK(Architecture({6, 2, 2, 3}).to_string() == "MLP(6,2,2,3)");
  CHECK(parse_activation("tanh") == Activation::Tanh);
  CHECK_THROWS_AS(parse_activation("gelu"), InvalidInput);
}

TEST_CASE("theta layout is weights row-wise then biases, layer by layer") {
  const Architecture arch({2, 3, 1});
  CHECK(arch.weight_offset(1) == 0);
  CHECK(arch.bias_offset(1) == 6);
  CHECK(arch.weight_offset(2) == 9);
  CHECK(arch.bias_offset(2) == 12);

  // Only W_1[1][0] (row 1, column 0) is nonzero: hidden neuron 1 sees x_0.
  Vector theta = Vector::Zero(13);
  theta[2] = 100.0;  // row 1, column 0
  theta[9 + 1] = 1.0;  // W_2 column 1
  Vector x(2);
  x << 1.0, -1.0;
  const double expected = 1.0 / (1.0 + std::exp(-(1.0 / (1.0 + std::exp(-100.0)))));
  CHECK(forward(arch, theta, x)[0] == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("forward on zero parameters") {
  CHECK(forward(Architecture({2, 2, 1}), Vector::Zero(9), Vector::Ones(2))[0] == 0.5);
  const Vector p = forward(Architecture({6, 2, 2, 3}), Vector::Zero(29), Vector::Ones(6));
  for (int k = 0; k < 3; ++k) CHECK(p[k] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("forward rejects mismatched shapes") {
  const Architecture arch({2, 2, 1});
  CHECK_THROWS_AS(forward(arch, Vector::Zero(8), Vector::Zero(2)), InvalidInput);
  CHECK_THROWS_AS(forward(arch, Vector::Zero(10), Vector::Zero(2)), InvalidInput);
  CHECK_THROWS_AS(forward(arch, Vector::Zero(9), Vector::Zero(3)), InvalidInput);
}

TEST_CASE("forward matches a layer-by-layer loop evaluation") {
  std::mt19937_64 rng(11);
  for (const auto& widths : {std::vector<int>{2, 2, 1}, std::vector<int>{6, 2, 2, 3}, std::vector<int>{3, 4, 5, 2}}) {
    const Architecture arch(widths);
    for (int rep = 0; rep < 10; ++rep) {
      const Vector theta = random_vector(rng, static_cast<Eigen::Index>(arch.parameter_count()), 2.0);
      const Vector x = random_vector(rng, arch.input_dim(), 1.0);
      const auto expected = oracle::forward(widths, !arch.is_binary(), to_std(theta), to_std(x));
      const Vector got = forward(arch, theta, x);
      REQUIRE(got.size() == static_cast<Eigen::Index>(expected.size()));
      for (std::size_t k = 0; k < expected.size(); ++k) CHECK(got[k] == doctest::Approx(expected[k]).epsilon(1e-13));
    }
  }
}

TEST_CASE("softmax outputs form a distribution, sigmoid event probabilities sum to one") {
  std::mt19937_64 rng(3);
  const Architecture multi({6, 2, 2, 3});
  const Architecture binary({2, 2, 1});
  for (int rep = 0; rep < 50; ++rep) {
    const Vector p = forward(multi, random_vector(rng, 29, 3.0), random_vector(rng, 6, 1.0));
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
    CHECK((p.array() > 0.0).all());
    CHECK((p.array() < 1.0).all());
    const Vector z = event_probabilities(binary, random_vector(rng, 9, 3.0), random_vector(rng, 2, 1.0));
    CHECK(z[0] + z[1] == 1.0);
  }
}

TEST_CASE("binary log-likelihood examples") {
  const Architecture arch({1, 1, 1});
  LabeledDataset one;
  one.features = Matrix::Zero(1, 1);
  one.labels = {1};
  CHECK(log_likelihood_binary(arch, Vector::Zero(4), one) == doctest::Approx(std::log(0.5)).epsilon(1e-15));

  // Output bias alone sets the logit; hidden contributes W_2 = 0.
  Vector t1 = Vector::Zero(4), t2 = Vector::Zero(4);
  t1[3] = logit(0.9);
  t2[3] = logit(0.2);
  LabeledDataset y0 = one;
  y0.labels = {0};
  const double total = log_likelihood_binary(arch, t1, one) + log_likelihood_binary(arch, t2, y0);
  CHECK(total == doctest::Approx(-0.328504066972036).epsilon(1e-13));
}

TEST_CASE("log-likelihoods match per-sample brute force") {
  std::mt19937_64 rng(5);
  for (const auto& widths : {std::vector<int>{2, 2, 1}, std::vector<int>{6, 2, 2, 3}}) {
    const Architecture arch(widths);
    for (int rep = 0; rep < 10; ++rep) {
      const auto data = random_dataset(rng, arch, 10);
      const Vector theta = random_vector(rng, static_cast<Eigen::Index>(arch.parameter_count()), 1.5);
      std::vector<std::vector<double>> xs;
      for (int i = 0; i < 10; ++i) xs.push_back(to_std(data.features.row(i).transpose()));
      const double expected = oracle::log_likelihood(widths, to_std(theta), xs, data.labels);
      const double got = arch.is_binary() ? log_likelihood_binary(arch, theta, data)
                                          : log_likelihood_multiclass(arch, theta, data);
      CHECK(got == doctest::Approx(expected).epsilon(1e-12));
      CHECK(got <= 0.0);
      CHECK(log_likelihood(arch, theta, data) == got);
    }
  }
}

TEST_CASE("multiclass uniform softmax") {
  const Architecture arch({2, 2, 3});
  LabeledDataset d;
  d.features = Matrix::Ones(1, 2);
  for (int y = 0; y < 3; ++y) {
    d.labels = {y};
    CHECK(log_likelihood_multiclass(arch, Vector::Zero(15), d) ==
          doctest::Approx(-1.0986122886681098).epsilon(1e-14));
  }
}

TEST_CASE("two-output softmax and sigmoid agree on matching event probabilities") {
  // Softmax with logits (0, g) gives Pr(y=1) = sigmoid(g).
  std::mt19937_64 rng(8);
  const Architecture sig({2, 2, 1});
  const Architecture soft({2, 2, 2});
  for (int rep = 0; rep < 20; ++rep) {
    const Vector ts = random_vector(rng, 9, 2.0);
    Vector tm = Vector::Zero(12);
    tm.head(6) = ts.head(6);  // hidden layer
    tm[8] = ts[6];           // W_2 row 1
    tm[9] = ts[7];
    tm[11] = ts[8];  // b_2[1]
    const auto data = random_dataset(rng, sig, 10);
    CHECK(log_likelihood_binary(sig, ts, data) ==
          doctest::Approx(log_likelihood_multiclass(soft, tm, data)).epsilon(1e-12));
  }
}

TEST_CASE("log-likelihood is invariant to sample order") {
  std::mt19937_64 rng(9);
  const Architecture arch({6, 2, 2, 3});
  auto data = random_dataset(rng, arch, 30);
  const Vector theta = random_vector(rng, 29, 1.0);
  const double before = log_likelihood(arch, theta, data);
  LabeledDataset rev = data;
  for (int i = 0; i < 30; ++i) {
    rev.features.row(i) = data.features.row(29 - i);
    rev.labels[i] = data.labels[29 - i];
  }
  CHECK(log_likelihood(arch, theta, rev) == doctest::Approx(before).epsilon(1e-13));
}

TEST_CASE("clamped probabilities keep the log-likelihood finite") {
  const Architecture arch({1, 1, 1});
  LabeledDataset d;
  d.features = Matrix::Zero(1, 1);
  d.labels = {0};
  Vector theta = Vector::Zero(4);
  theta[3] = 1e4;  // Pr(y=1) = 1 in double precision
  const double ll = log_likelihood_binary(arch, theta, d);
  CHECK(std::isfinite(ll));
  CHECK(ll == doctest::Approx(std::log(1e-12)).epsilon(1e-12));
  CHECK(grad_log_likelihood(arch, theta, d).isZero());
}

TEST_CASE("labels out of range are rejected") {
  const Architecture arch({2, 2, 1});
  LabeledDataset d;
  d.features = Matrix::Zero(1, 2);
  d.labels = {2};
  CHECK_THROWS_AS(log_likelihood(arch, Vector::Zero(9), d), InvalidInput);
  CHECK_THROWS_AS(log_likelihood_multiclass(arch, Vector::Zero(9), d), InvalidInput);
}

TEST_CASE("log prior") {
  CHECK(log_prior(Vector::Zero(1), 10.0) == doctest::Approx(-2.0702310797016956).epsilon(1e-15));
  CHECK(log_prior(Vector::Ones(9), 10.0) == doctest::Approx(-4.5 * std::log(20.0 * M_PI) - 0.45).epsilon(1e-15));
  CHECK(log_prior(Vector::Ones(9), 10.0) == doctest::Approx(-19.08207971731526).epsilon(1e-14));
  Vector theta = Vector::Constant(5, 0.3);
  double prev = log_prior(theta, 10.0);
  for (int k = 0; k < 10; ++k) {
    theta.array() += 0.5;
    const double next = log_prior(theta, 10.0);
    CHECK(next < prev);
    prev = next;
  }
  CHECK_THROWS_AS(log_prior(theta, 0.0), InvalidInput);
  const Vector t = Vector::LinSpaced(7, -3.0, 3.0);
  CHECK(grad_log_prior(t, 10.0).isApprox(-t / 10.0, 1e-15));
}

TEST_CASE("log posterior is likelihood plus prior") {
  std::mt19937_64 rng(12);
  const Architecture arch({2, 2, 1});
  const auto data = random_dataset(rng, arch, 20);
  const Vector theta = random_vector(rng, 9, 1.0);
  CHECK(log_posterior(arch, theta, data, 10.0) == log_likelihood(arch, theta, data) + log_prior(theta, 10.0));

  LabeledDataset empty;
  empty.features = Matrix(0, 2);
  CHECK(log_posterior(arch, theta, empty, 10.0) == log_prior(theta, 10.0));
  CHECK(grad_log_posterior(arch, Vector::Zero(9), empty, 10.0).isZero());

  // Posterior ratios do not depend on the prior normalising constant.
  const Vector other = random_vector(rng, 9, 1.0);
  const double with_constant = log_posterior(arch, other, data, 10.0) - log_posterior(arch, theta, data, 10.0);
  const double without = (log_likelihood(arch, other, data) - other.squaredNorm() / 20.0) -
                         (log_likelihood(arch, theta, data) - theta.squaredNorm() / 20.0);
  CHECK(with_constant == doctest::Approx(without).epsilon(1e-12));

  const PosteriorModel model(arch, data, 10.0);
  CHECK(model.log_posterior(theta) == log_posterior(arch, theta, data, 10.0));
  CHECK(model.dimension() == 9);
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 rng(21);
  for (const auto& widths : {std::vector<int>{2, 2, 1}, std::vector<int>{6, 2, 2, 3}}) {
    const Architecture arch(widths);
    for (int rep = 0; rep < 10; ++rep) {
      const auto data = random_dataset(rng, arch, 25);
      const Vector theta = random_vector(rng, static_cast<Eigen::Index>(arch.parameter_count()), 1.0);
      const auto f = [&](const Vector& t) { return log_posterior(arch, t, data, 10.0); };
      const Vector fd = oracle::finite_difference_gradient(f, theta, 1e-5);
      const Vector g = grad_log_posterior(arch, theta, data, 10.0);
      const double rel = (g - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff());
      CHECK(rel < 1e-5);
      const auto vg = log_likelihood_and_gradient(arch, theta, data);
      CHECK(vg.value == doctest::Approx(log_likelihood(arch, theta, data)).epsilon(1e-14));
      CHECK((vg.gradient + grad_log_prior(theta, 10.0)).isApprox(g, 1e-14));
    }
  }
}

TEST_CASE("gradient for other hidden activations") {
  std::mt19937_64 rng(22);
  for (const auto act : {Activation::Tanh, Activation::Identity, Activation::ReLU}) {
    const Architecture arch({3, 4, 2}, act);
    const auto data = random_dataset(rng, arch, 15);
    const Vector theta = random_vector(rng, static_cast<Eigen::Index>(arch.parameter_count()), 1.0);
    const auto f = [&](const Vector& t) { return log_posterior(arch, t, data, 10.0); };
    const Vector fd = oracle::finite_difference_gradient(f, theta, 1e-6);
    const Vector g = grad_log_posterior(arch, theta, data, 10.0);
    CHECK((g - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff()) < 1e-5);
  }
}

TEST_CASE("hidden-neuron permutation leaves the likelihood unchanged") {
  std::mt19937_64 rng(31);
  const Architecture arch({2, 2, 1});
  for (int rep = 0; rep < 100; ++rep) {
    const auto data = random_dataset(rng, arch, 20);
    const Vector theta = random_vector(rng, 9, 2.0);
    const Vector swapped = permute_hidden_neurons(arch, theta, 1, 0, 1);
    CHECK(swapped != theta);
    CHECK(std::abs(log_likelihood_binary(arch, swapped, data) - log_likelihood_binary(arch, theta, data)) <= 1e-12);
    CHECK(permute_hidden_neurons(arch, swapped, 1, 0, 1) == theta);
  }
  const Architecture deep({6, 2, 2, 3});
  const Vector theta = random_vector(rng, 29, 1.0);
  const auto data = random_dataset(rng, deep, 10);
  CHECK(log_likelihood(deep, permute_hidden_neurons(deep, theta, 2, 0, 1), data) ==
        doctest::Approx(log_likelihood(deep, theta, data)).epsilon(1e-13));
  CHECK_THROWS_AS(permute_hidden_neurons(deep, theta, 3, 0, 1), InvalidInput);
}

TEST_CASE("tanh hidden networks are invariant to a sign flip of one hidden neuron") {
  std::mt19937_64 rng(32);
  const Architecture arch({2, 2, 1}, Activation::Tanh);
  const auto data = random_dataset(rng, arch, 20);
  const Vector theta = random_vector(rng, 9, 1.0);
  Vector flipped = theta;
  flipped[0] = -flipped[0];
  flipped[1] = -flipped[1];
  flipped[4] = -flipped[4];  // b_1[0]
  flipped[6] = -flipped[6];  // W_2[0][0]
  CHECK(log_likelihood(arch, flipped, data) == doctest::Approx(log_likelihood(arch, theta, data)).epsilon(1e-13));
}
