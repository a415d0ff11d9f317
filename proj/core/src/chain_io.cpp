#include "bnn/chain_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "bnn/csv.hpp"
#include "bnn/error.hpp"

namespace bnn {

void write_chain_csv(const std::filesystem::path& path, const RowMatrix& draws) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write chain " + path.string());
  std::string line;
  for (Eigen::Index t = 0; t < draws.rows(); ++t) {
    line.clear();
    for (Eigen::Index k = 0; k < draws.cols(); ++k) {
      if (k) line += ',';
      line += csv::format_double(draws(t, k));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw IoError("failed writing " + path.string());
}

RowMatrix read_chain_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open chain " + path.string());
  std::vector<double> values;
  std::size_t width = 0;
  std::size_t rows = 0;
  std::string line;
  while (csv::read_line(in, line)) {
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split_record(line);
    if (rows == 0) width = fields.size();
    if (fields.size() != width) {
      throw InvalidInput(path.string() + ":" + std::to_string(rows + 1) + ": expected " + std::to_string(width) +
                         " columns, found " + std::to_string(fields.size()));
    }
    for (const auto& f : fields) {
      const auto v = csv::parse_double(f);
      if (!v) throw InvalidInput(path.string() + ":" + std::to_string(rows + 1) + ": cannot parse '" + f + "'");
      values.push_back(*v);
    }
    ++rows;
  }
  RowMatrix draws(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  std::copy(values.begin(), values.end(), draws.data());
  return draws;
}

std::string format_hms(double seconds) {
  const auto total = static_cast<long long>(std::llround(std::max(0.0, seconds)));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld:%02lld:%02lld", total / 3600, (total / 60) % 60, total % 60);
  return buf;
}

nlohmann::json chain_metadata(const Chain& chain, const nlohmann::json& config) {
  nlohmann::json j;
  j["sampler"] = std::string(to_string(chain.sampler));
  j["seed"] = chain.seed;
  j["burnin"] = chain.burnin;
  j["iterations"] = chain.iterations();
  j["dimension"] = chain.dimension();
  j["accepted"] = chain.accepted;
  j["acceptance_rate"] = chain.acceptance_rate();
  if (chain.sampler == SamplerKind::HMC) j["divergences"] = chain.divergences;
  if (chain.sampler == SamplerKind::PP) {
    j["swap_attempts"] = chain.swap_attempts;
    j["swap_accepted"] = chain.swap_accepted;
  }
  j["runtime_seconds"] = chain.runtime_seconds;
  j["runtime"] = format_hms(chain.runtime_seconds);
  j["config"] = config;
  return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

std::filesystem::path metadata_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  return p.replace_extension(".json");
}

Chain load_chain(const std::filesystem::path& csv_path) {
  Chain chain;
  chain.draws = read_chain_csv(csv_path);
  const auto meta_path = metadata_path(csv_path);
  if (std::filesystem::exists(meta_path)) {
    const auto meta = read_json(meta_path);
    chain.sampler = parse_sampler(meta.value("sampler", "MH"));
    chain.seed = meta.value("seed", std::uint64_t{0});
    chain.burnin = meta.value("burnin", std::size_t{0});
    chain.accepted = meta.value("accepted", std::size_t{0});
    chain.runtime_seconds = meta.value("runtime_seconds", 0.0);
    chain.divergences = meta.value("divergences", std::size_t{0});
    chain.swap_attempts = meta.value("swap_attempts", std::size_t{0});
    chain.swap_accepted = meta.value("swap_accepted", std::size_t{0});
  }
  return chain;
}

}  // namespace bnn
