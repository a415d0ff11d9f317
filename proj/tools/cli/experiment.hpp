#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bnn/data.hpp"
#include "bnn/diagnostics.hpp"
#include "bnn/mlp.hpp"
#include "bnn/predictive.hpp"
#include "bnn/samplers.hpp"

namespace bnn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

/// Where a run's data comes from: the in-memory noisy XOR generator, or a
/// train/test pair of CSV files read through an encoding manifest.
struct DatasetSpec {
  std::string name = "noisy-xor";
  std::optional<NoisyXorConfig> generator = NoisyXorConfig{};
  fs::path train;
  fs::path test;
  /// Defaults to manifest.json next to the training file.
  fs::path manifest;
  /// z-score the manifest's standardized columns over train and test together.
  bool standardize = false;

  /// Relative paths are resolved against `base`.
  static DatasetSpec from_json(const json& j, const fs::path& base);
  json to_json() const;
};

struct SamplerSpec {
  SamplerKind kind = SamplerKind::MH;
  MhConfig mh;
  HmcConfig hmc;
  PpConfig pp;

  static SamplerSpec from_json(const json& j);
  /// Only the fields that matter for `kind`.
  json to_json() const;
};

struct ExperimentConfig {
  std::string name;
  DatasetSpec dataset;
  std::string architecture = "MLP(2,2,1)";
  Activation hidden_activation = Activation::Sigmoid;
  double prior_variance = 10.0;
  SamplerSpec sampler;
  std::size_t chains = 10;
  std::size_t iterations = 110000;
  std::size_t burnin = 10000;
  std::size_t tail = 10000;
  std::uint64_t seed = 0;
  SgdConfig sgd;

  Architecture arch() const { return Architecture::parse(architecture, hidden_activation); }
  void validate() const;
  /// "<dataset>_<sampler>" unless a name was given.
  std::string run_name() const;

  static ExperimentConfig from_json(const json& j, const fs::path& base = {});
  static ExperimentConfig load(const fs::path& path);
  json to_json() const;
};

TrainTestSplit load_dataset(const DatasetSpec& spec);

/// Seed of chain `index` (0-based): seed xor index.
std::uint64_t chain_seed(const ExperimentConfig& config, std::size_t index);
/// Prior draw(s) used to start chain `index`, from a stream separate from the sampler's.
std::vector<Vector> initial_states(const ExperimentConfig& config, std::size_t index, std::size_t count);
/// "chain_01.csv" for index 0.
std::string chain_file_name(std::size_t index);

Chain run_chain(const ExperimentConfig& config, const PosteriorModel& model, std::size_t index);

/// Calls body(i) for i in [0, count) on up to `jobs` threads. The first
/// exception thrown by any call is rethrown once all workers finish.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& body);

/// Runs every chain of `config`, writing chain_XX.csv/.json into `out` as each
/// finishes, plus config.json. Returns the chain files in index order.
std::vector<fs::path> sample_to_dir(const ExperimentConfig& config, const fs::path& out, unsigned jobs);

/// A directory produced by sample_to_dir.
struct RunDir {
  fs::path dir;
  ExperimentConfig config;
  std::vector<fs::path> chain_files;

  static RunDir open(const fs::path& dir);
  std::vector<Chain> load_chains() const;
};

DiagnosticReport diagnose_chains(const std::vector<Chain>& chains, std::size_t burnin);

struct AccuracySummary {
  std::vector<double> per_chain;
  double mean = 0.0;
  double median = 0.0;
  std::size_t tail = 0;

  json to_json() const;
};

double median(std::vector<double> values);
AccuracySummary summarize(std::vector<double> per_chain, std::size_t tail);

/// index,true,predicted,prob_predicted,prob_true
void write_prediction_csv(const fs::path& path, const PredictionReport& report,
                          const std::vector<std::string>& class_names);
/// Plain numeric matrix, no header, one CSV row per matrix row.
void write_matrix_csv(const fs::path& path, const Matrix& m);

/// Exact XOR of the cell centre coordinates thresholded at 0.5.
Matrix ground_truth_grid(const GridSpec& grid);

/// Accuracy fraction as a percentage with two decimals, e.g. "75.92".
std::string format_percent(double fraction);

struct TableRow {
  std::string sampler;
  double psrf = 0.0;
  double ess = 0.0;
  std::optional<double> accuracy;
  std::optional<double> prior_accuracy;
};

/// Sampler | PSRF | ESS | Accuracy (MCMC) | Accuracy (Prior)
std::string render_table(const std::string& title, const std::vector<TableRow>& rows);

}  // namespace bnn::cli
