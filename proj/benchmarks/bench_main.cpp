#include <benchmark/benchmark.h>

#include "bnn/data.hpp"
#include "bnn/diagnostics.hpp"
#include "bnn/mlp.hpp"
#include "bnn/random.hpp"
#include "bnn/samplers.hpp"

namespace {

const bnn::LabeledDataset& xor_train() {
  static const auto data = bnn::generate_noisy_xor(bnn::NoisyXorConfig{}).train;
  return data;
}

/// Random three-class data shaped like the penguins split.
const bnn::LabeledDataset& three_class() {
  static const auto data = [] {
    bnn::Rng rng(3);
    bnn::LabeledDataset d;
    d.features = bnn::Matrix(225, 6);
    for (int i = 0; i < 225; ++i) {
      d.features.row(i) = bnn::standard_normal(rng, 6).transpose();
      d.labels.push_back(i % 3);
    }
    return d;
  }();
  return data;
}

void BM_LogPosteriorXor(benchmark::State& state) {
  const bnn::Architecture arch({2, 2, 1});
  bnn::Rng rng(1);
  const bnn::Vector theta = bnn::draw_from_prior(rng, 9, 10.0);
  for (auto _ : state) benchmark::DoNotOptimize(bnn::log_posterior(arch, theta, xor_train(), 10.0));
}
BENCHMARK(BM_LogPosteriorXor);

void BM_GradLogPosteriorXor(benchmark::State& state) {
  const bnn::Architecture arch({2, 2, 1});
  bnn::Rng rng(1);
  const bnn::Vector theta = bnn::draw_from_prior(rng, 9, 10.0);
  for (auto _ : state) benchmark::DoNotOptimize(bnn::grad_log_posterior(arch, theta, xor_train(), 10.0));
}
BENCHMARK(BM_GradLogPosteriorXor);

void BM_GradLogPosteriorMulticlass(benchmark::State& state) {
  const bnn::Architecture arch({6, 2, 2, 3});
  bnn::Rng rng(2);
  const bnn::Vector theta = bnn::draw_from_prior(rng, 29, 10.0);
  for (auto _ : state) benchmark::DoNotOptimize(bnn::grad_log_posterior(arch, theta, three_class(), 10.0));
}
BENCHMARK(BM_GradLogPosteriorMulticlass);

void BM_Minse(benchmark::State& state) {
  const auto v = state.range(0);
  const int n = static_cast<int>(state.range(1));
  bnn::Rng rng(4);
  bnn::RowMatrix draws(v, n);
  bnn::Vector x = bnn::Vector::Zero(n);
  for (Eigen::Index t = 0; t < v; ++t) {
    x = 0.5 * x + bnn::standard_normal(rng, n);
    draws.row(t) = x.transpose();
  }
  for (auto _ : state) benchmark::DoNotOptimize(bnn::minse(draws));
}
BENCHMARK(BM_Minse)->Args({100000, 3})->Args({10000, 9})->Args({10000, 29})->Unit(benchmark::kMillisecond);

void BM_MhIterationsXor(benchmark::State& state) {
  const bnn::PosteriorModel model(bnn::Architecture({2, 2, 1}), xor_train(), 10.0);
  const auto target = bnn::make_target(model);
  bnn::Rng rng(5);
  const bnn::Vector init = bnn::draw_from_prior(rng, 9, 10.0);
  for (auto _ : state) benchmark::DoNotOptimize(bnn::mh_chain(target, init, bnn::MhConfig{0.01}, 1000, 6));
}
BENCHMARK(BM_MhIterationsXor)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
