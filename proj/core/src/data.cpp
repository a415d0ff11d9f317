#include "bnn/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include "bnn/csv.hpp"
#include "bnn/error.hpp"
#include "bnn/random.hpp"

namespace bnn {
namespace {

constexpr std::array<std::array<int, 2>, 4> kCorners{{{0, 0}, {0, 1}, {1, 0}, {1, 1}}};

LabeledDataset noisy_xor_set(int per_corner, double c, bool shared, Rng& rng, DatasetRole role) {
  LabeledDataset data;
  data.role = role;
  data.feature_names = {"x1", "x2"};
  data.class_names = {"0", "1"};
  data.features.resize(4 * per_corner, 2);
  Eigen::Index row = 0;
  for (const auto& corner : kCorners) {
    for (int k = 0; k < per_corner; ++k, ++row) {
      const double u1 = uniform01(rng);
      const double u2 = shared ? u1 : uniform01(rng);
      data.features(row, 0) = u1 + (corner[0] ? c : -c);
      data.features(row, 1) = u2 + (corner[1] ? c : -c);
      data.labels.push_back(exact_xor(corner[0], corner[1]));
    }
  }
  return data;
}

std::string_view encoding_name(FeatureEncoding e) {
  switch (e) {
    case FeatureEncoding::Numeric: return "numeric";
    case FeatureEncoding::Binary: return "binary";
    case FeatureEncoding::Ordinal: return "ordinal";
    case FeatureEncoding::OneHot: return "one_hot";
  }
  return "numeric";
}

FeatureEncoding parse_encoding(const std::string& name) {
  for (auto e : {FeatureEncoding::Numeric, FeatureEncoding::Binary, FeatureEncoding::Ordinal,
                 FeatureEncoding::OneHot}) {
    if (encoding_name(e) == name) return e;
  }
  throw InvalidInput("unknown feature encoding '" + name + "'");
}

int level_index(const std::vector<std::string>& levels, std::string_view value) {
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (levels[k] == value) return static_cast<int>(k);
  }
  return -1;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

}  // namespace

int exact_xor(int a, int b) {
  if ((a != 0 && a != 1) || (b != 0 && b != 1)) throw InvalidInput("exact_xor takes bits");
  return a ^ b;
}

void validate(const NoisyXorConfig& config) {
  if (!(config.c > 0.5 && config.c < 1.0)) throw InvalidInput("noisy XOR needs c in (0.5, 1)");
  if (config.train_per_corner < 1 || config.test_per_corner < 1) {
    throw InvalidInput("noisy XOR needs positive per-corner counts");
  }
}

TrainTestSplit generate_noisy_xor(const NoisyXorConfig& config) {
  validate(config);
  Rng rng(config.seed);
  TrainTestSplit split;
  split.train = noisy_xor_set(config.train_per_corner, config.c, config.shared_noise, rng, DatasetRole::Train);
  split.test = noisy_xor_set(config.test_per_corner, config.c, config.shared_noise, rng, DatasetRole::Test);
  return split;
}

int EncodingManifest::feature_count() const {
  int count = 0;
  for (const auto& f : features) count += f.encoding == FeatureEncoding::OneHot ? static_cast<int>(f.levels.size()) : 1;
  return count;
}

std::vector<std::string> EncodingManifest::feature_names() const {
  std::vector<std::string> names;
  for (const auto& f : features) {
    if (f.encoding == FeatureEncoding::OneHot) {
      for (const auto& level : f.levels) names.push_back(f.column + "_" + level);
    } else {
      names.push_back(f.column);
    }
  }
  return names;
}

std::vector<bool> EncodingManifest::standardize_mask() const {
  std::vector<bool> mask;
  for (const auto& f : features) {
    const std::size_t width = f.encoding == FeatureEncoding::OneHot ? f.levels.size() : 1;
    mask.insert(mask.end(), width, f.standardize);
  }
  return mask;
}

EncodingManifest EncodingManifest::from_json(const nlohmann::json& j) {
  try {
    EncodingManifest m;
    m.name = j.value("name", "");
    for (const auto& f : j.at("features")) {
      FeatureSpec spec;
      spec.column = f.at("column").get<std::string>();
      spec.encoding = parse_encoding(f.value("encoding", "numeric"));
      spec.levels = f.value("levels", std::vector<std::string>{});
      spec.standardize = f.value("standardize", true);
      if (spec.encoding == FeatureEncoding::Binary && spec.levels.size() != 2) {
        throw InvalidInput("binary feature '" + spec.column + "' needs exactly two levels");
      }
      if ((spec.encoding == FeatureEncoding::Ordinal || spec.encoding == FeatureEncoding::OneHot) &&
          spec.levels.empty()) {
        throw InvalidInput("categorical feature '" + spec.column + "' needs its levels");
      }
      m.features.push_back(std::move(spec));
    }
    m.label_column = j.at("label").at("column").get<std::string>();
    m.label_levels = j.at("label").at("levels").get<std::vector<std::string>>();
    if (m.features.empty()) throw InvalidInput("manifest lists no features");
    if (m.label_levels.size() < 2) throw InvalidInput("manifest needs at least two label levels");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed encoding manifest: ") + e.what());
  }
}

EncodingManifest EncodingManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json EncodingManifest::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["features"] = nlohmann::json::array();
  for (const auto& f : features) {
    nlohmann::json spec{{"column", f.column}, {"encoding", encoding_name(f.encoding)}};
    if (!f.levels.empty()) spec["levels"] = f.levels;
    if (!f.standardize) spec["standardize"] = false;
    j["features"].push_back(spec);
  }
  j["label"] = {{"column", label_column}, {"levels", label_levels}};
  return j;
}

LabeledDataset load_csv_dataset(const std::filesystem::path& path, const EncodingManifest& manifest,
                                DatasetRole role) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  std::string line;
  if (!csv::read_line(in, line)) throw InvalidInput(path.string() + ": empty file");
  const auto header = csv::split_record(line);
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < header.size(); ++k) index[std::string(csv::trim(header[k]))] = k;

  auto column_of = [&](const std::string& name) {
    const auto it = index.find(name);
    if (it == index.end()) throw InvalidInput(path.string() + ": missing column '" + name + "'");
    return it->second;
  };
  std::vector<std::size_t> feature_cols;
  for (const auto& f : manifest.features) feature_cols.push_back(column_of(f.column));
  const std::size_t label_col = column_of(manifest.label_column);

  const int width = manifest.feature_count();
  std::vector<std::vector<double>> rows;
  LabeledDataset data;
  data.role = role;
  data.feature_names = manifest.feature_names();
  data.class_names = manifest.label_levels;

  std::size_t line_no = 1;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split_record(line);
    if (fields.size() != header.size()) {
      throw InvalidInput(where(path, line_no) + "expected " + std::to_string(header.size()) + " fields, found " +
                         std::to_string(fields.size()));
    }
    bool missing = csv::is_missing(fields[label_col]);
    for (std::size_t col : feature_cols) missing = missing || csv::is_missing(fields[col]);
    if (missing) continue;

    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(width));
    for (std::size_t k = 0; k < manifest.features.size(); ++k) {
      const auto& spec = manifest.features[k];
      const auto value = csv::trim(fields[feature_cols[k]]);
      if (spec.encoding == FeatureEncoding::Numeric) {
        const auto parsed = csv::parse_double(value);
        if (!parsed || !std::isfinite(*parsed)) {
          throw InvalidInput(where(path, line_no) + "cannot parse '" + std::string(value) + "' in column '" +
                             spec.column + "'");
        }
        row.push_back(*parsed);
        continue;
      }
      const int level = level_index(spec.levels, value);
      if (level < 0) {
        throw InvalidInput(where(path, line_no) + "unknown level '" + std::string(value) + "' in column '" +
                           spec.column + "'");
      }
      if (spec.encoding == FeatureEncoding::OneHot) {
        for (std::size_t l = 0; l < spec.levels.size(); ++l) row.push_back(static_cast<int>(l) == level ? 1.0 : 0.0);
      } else {
        row.push_back(level);
      }
    }
    const auto label_text = csv::trim(fields[label_col]);
    const int label = level_index(manifest.label_levels, label_text);
    if (label < 0) throw InvalidInput(where(path, line_no) + "unknown label '" + std::string(label_text) + "'");
    rows.push_back(std::move(row));
    data.labels.push_back(label);
  }

  data.features.resize(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int k = 0; k < width; ++k) data.features(static_cast<Eigen::Index>(i), k) = rows[i][k];
  }
  return data;
}

void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset " + path.string());
  for (Eigen::Index k = 0; k < data.features.cols(); ++k) {
    out << (static_cast<std::size_t>(k) < data.feature_names.size() ? data.feature_names[k]
                                                                     : "x" + std::to_string(k + 1))
        << ',';
  }
  out << "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Eigen::Index k = 0; k < data.features.cols(); ++k) {
      out << csv::format_double(data.features(static_cast<Eigen::Index>(i), k)) << ',';
    }
    const int y = data.labels[i];
    out << (static_cast<std::size_t>(y) < data.class_names.size() ? data.class_names[y] : std::to_string(y)) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

EncodingManifest prepared_manifest(const LabeledDataset& data, const std::string& name) {
  EncodingManifest m;
  m.name = name;
  for (Eigen::Index k = 0; k < data.features.cols(); ++k) {
    FeatureSpec f;
    f.column = static_cast<std::size_t>(k) < data.feature_names.size() ? data.feature_names[k]
                                                                       : "x" + std::to_string(k + 1);
    f.standardize = false;
    m.features.push_back(std::move(f));
  }
  m.label_column = "label";
  m.label_levels = data.class_names;
  if (m.label_levels.empty()) {
    int classes = 0;
    for (int y : data.labels) classes = std::max(classes, y + 1);
    for (int y = 0; y < std::max(classes, 2); ++y) m.label_levels.push_back(std::to_string(y));
  }
  return m;
}

LabeledDataset StandardizationStats::apply(const LabeledDataset& data) const {
  if (static_cast<std::size_t>(data.features.cols()) != mean.size()) {
    throw InvalidInput("standardization statistics do not match the feature count");
  }
  LabeledDataset out = data;
  for (Eigen::Index k = 0; k < out.features.cols(); ++k) {
    if (!applied[k]) continue;
    out.features.col(k) = ((out.features.col(k).array() - mean[k]) / stddev[k]).matrix();
  }
  return out;
}

nlohmann::json StandardizationStats::to_json() const {
  return {{"mean", mean}, {"stddev", stddev}, {"applied", applied}};
}

StandardizationStats compute_standardization(const Matrix& features, const std::vector<bool>& mask) {
  const Eigen::Index cols = features.cols();
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != cols) {
    throw InvalidInput("standardization mask does not match the feature count");
  }
  if (features.rows() < 2) throw InvalidInput("standardization needs at least two rows");
  StandardizationStats stats;
  for (Eigen::Index k = 0; k < cols; ++k) {
    const bool use = mask.empty() || mask[k];
    stats.applied.push_back(use);
    if (!use) {
      stats.mean.push_back(0.0);
      stats.stddev.push_back(1.0);
      continue;
    }
    const double mu = features.col(k).mean();
    const double var =
        (features.col(k).array() - mu).square().sum() / static_cast<double>(features.rows() - 1);
    if (!(var > 0.0)) throw InvalidInput("feature column " + std::to_string(k) + " has zero variance");
    stats.mean.push_back(mu);
    stats.stddev.push_back(std::sqrt(var));
  }
  return stats;
}

std::pair<LabeledDataset, StandardizationStats> standardize(const LabeledDataset& data,
                                                            const std::vector<bool>& mask) {
  auto stats = compute_standardization(data.features, mask);
  return {stats.apply(data), std::move(stats)};
}

std::pair<TrainTestSplit, StandardizationStats> standardize_jointly(const TrainTestSplit& split,
                                                                   const std::vector<bool>& mask) {
  if (split.train.features.cols() != split.test.features.cols()) {
    throw InvalidInput("train and test sets have different feature counts");
  }
  Matrix all(split.train.features.rows() + split.test.features.rows(), split.train.features.cols());
  all << split.train.features, split.test.features;
  auto stats = compute_standardization(all, mask);
  TrainTestSplit out{stats.apply(split.train), stats.apply(split.test)};
  return {std::move(out), std::move(stats)};
}

}  // namespace bnn
