#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bnn/mlp.hpp"

namespace bnn {

/// 1 iff exactly one of a, b is 1.
int exact_xor(int a, int b);

struct NoisyXorConfig {
  double c = 0.55;
  int train_per_corner = 125;
  int test_per_corner = 30;
  std::uint64_t seed = 0;
  /// Use one u for both coordinates of a point instead of one per coordinate.
  bool shared_noise = false;
};

void validate(const NoisyXorConfig& config);

struct TrainTestSplit {
  LabeledDataset train;
  LabeledDataset test;
};

/// The four corners (0,0), (0,1), (1,0), (1,1) in that order; each point draws
/// u_1, u_2 ~ U(0,1) (a single u when shared_noise is set) and sits at
/// (u_1 -/+ c, u_2 -/+ c), the sign picked per coordinate by the corner bit.
/// Labels are exact_xor of the corner. The training set is drawn first, then
/// the test set, from one stream seeded with config.seed.
TrainTestSplit generate_noisy_xor(const NoisyXorConfig& config);

enum class FeatureEncoding {
  Numeric,
  Binary,   // two levels -> 0/1
  Ordinal,  // k levels -> 0..k-1 in one column
  OneHot,   // k levels -> k indicator columns
};

struct FeatureSpec {
  std::string column;
  FeatureEncoding encoding = FeatureEncoding::Numeric;
  std::vector<std::string> levels;
  bool standardize = true;
};

/// Which CSV columns become features, how each is encoded, and the label
/// column with its ordered class names.
struct EncodingManifest {
  std::string name;
  std::vector<FeatureSpec> features;
  std::string label_column;
  std::vector<std::string> label_levels;

  int feature_count() const;
  std::vector<std::string> feature_names() const;
  /// One flag per encoded feature column.
  std::vector<bool> standardize_mask() const;

  static EncodingManifest from_json(const nlohmann::json& j);
  static EncodingManifest load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

/// Reads the columns named in `manifest`, dropping rows with a missing value
/// (empty field or NA) in any of them. Throws InvalidInput naming the line for
/// unparseable values and unknown levels or labels.
LabeledDataset load_csv_dataset(const std::filesystem::path& path, const EncodingManifest& manifest,
                                DatasetRole role = DatasetRole::Train);

/// Header row of feature names plus "label"; labels are written as class names
/// (or integers when the dataset has none) and values with 17 significant digits.
void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& data);

/// Manifest that reads back a file produced by write_dataset_csv.
EncodingManifest prepared_manifest(const LabeledDataset& data, const std::string& name);

struct StandardizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  /// Columns left untouched carry mean 0 and stddev 1.
  std::vector<bool> applied;

  LabeledDataset apply(const LabeledDataset& data) const;
  nlohmann::json to_json() const;
};

/// Per-column mean and sample standard deviation (divisor s - 1) over the rows
/// of `features`. Throws InvalidInput for a zero-variance column in `mask`.
StandardizationStats compute_standardization(const Matrix& features, const std::vector<bool>& mask = {});

/// z-scores every column of the dataset.
std::pair<LabeledDataset, StandardizationStats> standardize(const LabeledDataset& data,
                                                            const std::vector<bool>& mask = {});

/// Statistics from train and test stacked together, applied to both.
std::pair<TrainTestSplit, StandardizationStats> standardize_jointly(const TrainTestSplit& split,
                                                                   const std::vector<bool>& mask = {});

}  // namespace bnn
