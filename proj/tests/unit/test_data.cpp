#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

#include "bnn/csv.hpp"
#include "bnn/data.hpp"
#include "bnn/error.hpp"

using namespace bnn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "bnn_test_data";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const auto path = scratch(name);
  std::ofstream(path) << text;
  return path;
}

fs::path data_dir() { return fs::path(BNN_SOURCE_DATA_DIR); }

EncodingManifest simple_manifest() {
  return EncodingManifest::from_json(nlohmann::json::parse(R"({
    "name": "toy",
    "features": [
      {"column": "a"},
      {"column": "sex", "encoding": "binary", "levels": ["f", "m"]},
      {"column": "site", "encoding": "one_hot", "levels": ["x", "y", "z"]}
    ],
    "label": {"column": "cls", "levels": ["A", "B", "C"]}
  })"));
}

}  // namespace

TEST_CASE("exact XOR") {
  CHECK(exact_xor(0, 0) == 0);
  CHECK(exact_xor(1, 1) == 0);
  CHECK(exact_xor(0, 1) == 1);
  CHECK(exact_xor(1, 0) == 1);
  CHECK_THROWS_AS(exact_xor(2, 0), InvalidInput);
}

TEST_CASE("noisy XOR default sizes, balance and ranges") {
  const NoisyXorConfig cfg;
  const auto split = generate_noisy_xor(cfg);
  CHECK(split.train.size() == 500);
  CHECK(split.test.size() == 120);
  CHECK(split.train.role == DatasetRole::Train);
  CHECK(split.test.role == DatasetRole::Test);
  for (const auto* set : {&split.train, &split.test}) {
    int ones = 0;
    for (int y : set->labels) ones += y;
    CHECK(ones * 2 == static_cast<int>(set->size()));
    CHECK((set->features.array() >= -cfg.c).all());
    CHECK((set->features.array() <= 1.0 + cfg.c).all());
  }
}

TEST_CASE("noisy XOR points follow the corner branches") {
  const int corners[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (bool shared : {false, true}) {
    NoisyXorConfig cfg;
    cfg.train_per_corner = 50;
    cfg.seed = 3;
    cfg.shared_noise = shared;
    const auto split = generate_noisy_xor(cfg);
    const auto& x = split.train.features;
    int equal_offsets = 0;
    for (int c = 0; c < 4; ++c) {
      for (int k = 0; k < 50; ++k) {
        const int row = c * 50 + k;
        const double u1 = x(row, 0) - (corners[c][0] ? cfg.c : -cfg.c);
        const double u2 = x(row, 1) - (corners[c][1] ? cfg.c : -cfg.c);
        CHECK(u1 >= 0.0);
        CHECK(u1 < 1.0);
        CHECK(u2 >= -1e-15);
        CHECK(u2 < 1.0 + 1e-15);
        equal_offsets += std::abs(u1 - u2) < 1e-12;
        CHECK(split.train.labels[row] == exact_xor(corners[c][0], corners[c][1]));
      }
    }
    CHECK(equal_offsets == (shared ? 200 : 0));
  }
  // Corner (0, 1) with u = 0.3 lands at (-0.25, 0.85).
  CHECK(0.3 - 0.55 == doctest::Approx(-0.25));
  CHECK(0.3 + 0.55 == doctest::Approx(0.85));
}

TEST_CASE("noisy XOR is reproducible and honours custom counts") {
  NoisyXorConfig cfg;
  cfg.seed = 11;
  cfg.train_per_corner = 7;
  cfg.test_per_corner = 3;
  const auto a = generate_noisy_xor(cfg);
  const auto b = generate_noisy_xor(cfg);
  CHECK(a.train.features == b.train.features);
  CHECK(a.test.features == b.test.features);
  CHECK(a.train.size() == 28);
  CHECK(a.test.size() == 12);
  cfg.seed = 12;
  CHECK(generate_noisy_xor(cfg).train.features != a.train.features);
  cfg.c = 0.5;
  CHECK_THROWS_AS(generate_noisy_xor(cfg), InvalidInput);
  cfg.c = 1.0;
  CHECK_THROWS_AS(generate_noisy_xor(cfg), InvalidInput);
}

TEST_CASE("csv helpers") {
  CHECK(csv::split_record("a,\"b,c\",d") == std::vector<std::string>{"a", "b,c", "d"});
  CHECK(csv::split_record("\"say \"\"hi\"\"\",") == std::vector<std::string>{"say \"hi\"", ""});
  CHECK(csv::is_missing(""));
  CHECK(csv::is_missing(" NA "));
  CHECK_FALSE(csv::is_missing("0"));
  CHECK(csv::parse_double("1e-3").value() == 1e-3);
  CHECK_FALSE(csv::parse_double("abc").has_value());
  CHECK_FALSE(csv::parse_double("1.5x").has_value());
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 123456789.123456789}) {
    CHECK(csv::parse_double(csv::format_double(v)).value() == v);
  }
  std::istringstream in("a,b\r\nc\n");
  std::string line;
  REQUIRE(csv::read_line(in, line));
  CHECK(line == "a,b");
}

TEST_CASE("manifest encodings") {
  const auto m = simple_manifest();
  CHECK(m.feature_count() == 5);
  CHECK(m.feature_names() == std::vector<std::string>{"a", "sex", "site_x", "site_y", "site_z"});
  CHECK(EncodingManifest::from_json(m.to_json()).to_json() == m.to_json());
  CHECK_THROWS_AS(EncodingManifest::from_json(nlohmann::json::parse(R"({"features": []})")), InvalidInput);
  CHECK_THROWS_AS(EncodingManifest::from_json(nlohmann::json::parse(
                      R"({"features": [{"column": "a", "encoding": "binary", "levels": ["x"]}],
                          "label": {"column": "y", "levels": ["0", "1"]}})")),
                  InvalidInput);
}

TEST_CASE("loader drops rows with missing values and encodes categories") {
  const auto path = write_file("toy.csv",
                               "a,sex,site,cls,unused\n"
                               "1.5,f,y,B,zz\n"
                               "2.5,m,x,A,\n"
                               "NA,m,z,C,1\n"
                               "4.0,,z,C,1\n"
                               "3.0,m,z,C,NA\n");
  const auto data = load_csv_dataset(path, simple_manifest(), DatasetRole::Test);
  REQUIRE(data.size() == 3);
  CHECK(data.role == DatasetRole::Test);
  CHECK(data.labels == std::vector<int>{1, 0, 2});
  Eigen::RowVectorXd first(5);
  first << 1.5, 0.0, 0.0, 1.0, 0.0;
  CHECK(data.features.row(0) == first);
  Eigen::RowVectorXd last(5);
  last << 3.0, 1.0, 0.0, 0.0, 1.0;
  CHECK(data.features.row(2) == last);
}

TEST_CASE("one of five rows missing leaves four") {
  const auto m = EncodingManifest::from_json(nlohmann::json::parse(
      R"({"features": [{"column": "x"}, {"column": "y"}], "label": {"column": "c", "levels": ["0", "1"]}})"));
  const auto path = write_file("five.csv", "x,y,c\n1,2,0\n3,,1\n5,6,1\n7,8,0\n9,10,1\n");
  CHECK(load_csv_dataset(path, m).size() == 4);
}

TEST_CASE("loader errors name the line") {
  const auto m = simple_manifest();
  auto expect_error = [&](const std::string& body, const std::string& fragment) {
    const auto path = write_file("bad.csv", "a,sex,site,cls\n1,f,x,A\n" + body);
    try {
      load_csv_dataset(path, m);
      FAIL("expected an error");
    } catch (const InvalidInput& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  expect_error("abc,f,x,A\n", "bad.csv:3");
  expect_error("1,f,x,D\n", "unknown label 'D'");
  expect_error("1,q,x,A\n", "unknown level 'q'");
  expect_error("1,f,x\n", "expected 4 fields");
  CHECK_THROWS_AS(load_csv_dataset(scratch("does_not_exist.csv"), m), IoError);
  const auto no_col = write_file("nocol.csv", "a,sex,cls\n1,f,A\n");
  CHECK_THROWS_AS(load_csv_dataset(no_col, m), InvalidInput);
}

TEST_CASE("dataset round trip through CSV") {
  const auto split = generate_noisy_xor(NoisyXorConfig{});
  const auto path = scratch("xor_train.csv");
  write_dataset_csv(path, split.train);
  const auto reloaded = load_csv_dataset(path, prepared_manifest(split.train, "noisy-xor"));
  CHECK(reloaded.features == split.train.features);
  CHECK(reloaded.labels == split.train.labels);
  CHECK(reloaded.feature_names == split.train.feature_names);
}

TEST_CASE("standardization") {
  Matrix f(5, 2);
  f << 1, 10, 2, 20, 3, 30, 4, 45, 5, 50;
  LabeledDataset d;
  d.features = f;
  d.labels = {0, 1, 0, 1, 0};
  const auto [z, stats] = standardize(d);
  for (int k = 0; k < 2; ++k) {
    const double mean = z.features.col(k).mean();
    const double sd = std::sqrt((z.features.col(k).array() - mean).square().sum() / 4.0);
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(sd - 1.0) < 1e-10);
  }
  CHECK(stats.apply(d).features == z.features);
  CHECK(stats.stddev[0] == doctest::Approx(std::sqrt(2.5)).epsilon(1e-15));

  const auto [partial, pstats] = standardize(d, {false, true});
  CHECK(partial.features.col(0) == f.col(0));
  CHECK_FALSE(pstats.applied[0]);

  d.features.col(1).setConstant(2.0);
  CHECK_THROWS_AS(standardize(d), InvalidInput);
  CHECK_NOTHROW(standardize(d, {true, false}));
}

TEST_CASE("joint standardization uses train and test together") {
  TrainTestSplit split;
  split.train.features = Matrix::Constant(3, 1, 0.0);
  split.test.features = Matrix::Constant(1, 1, 4.0);
  split.train.labels = {0, 0, 0};
  split.test.labels = {1};
  const auto [out, stats] = standardize_jointly(split);
  CHECK(stats.mean[0] == 1.0);
  CHECK(stats.stddev[0] == 2.0);
  CHECK(out.train.features(0, 0) == -0.5);
  CHECK(out.test.features(0, 0) == 1.5);
}

TEST_CASE("vendored datasets have the expected final form") {
  struct Expect {
    const char* name;
    std::size_t train;
    std::size_t test;
  };
  for (const auto& e : {Expect{"penguins", 223, 110}, Expect{"hawks", 596, 295}}) {
    const auto dir = data_dir() / e.name;
    const auto manifest = EncodingManifest::load(dir / "manifest.json");
    CHECK(manifest.feature_count() == 6);
    CHECK(manifest.label_levels.size() == 3);
    const auto train = load_csv_dataset(dir / "raw_train.csv", manifest, DatasetRole::Train);
    const auto test = load_csv_dataset(dir / "raw_test.csv", manifest, DatasetRole::Test);
    CHECK(train.size() == e.train);
    CHECK(test.size() == e.test);
    CHECK(train.num_features() == 6);
    const auto [std_split, stats] = standardize_jointly({train, test}, manifest.standardize_mask());
    CHECK(std::abs(std_split.train.features.col(0).mean()) < 1.0);
  }
}
