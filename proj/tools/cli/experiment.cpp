#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "bnn/chain_io.hpp"
#include "bnn/csv.hpp"
#include "bnn/error.hpp"
#include "bnn/random.hpp"

namespace bnn::cli {
namespace {

// Initial states come from their own stream so they do not overlap the sampler's draws.
constexpr std::uint64_t kInitStream = 0x9E3779B97F4A7C15ULL;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidInput(where + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw InvalidInput("unknown key '" + key + "' in " + where);
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  if (path.empty() || path.is_absolute()) return path;
  return fs::absolute(base / path).lexically_normal();
}

template <class T>
T get(const json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : it->template get<T>();
}

}  // namespace

DatasetSpec DatasetSpec::from_json(const json& j, const fs::path& base) {
  check_keys(j, {"name", "generator", "train", "test", "manifest", "standardize"}, "dataset");
  DatasetSpec spec;
  spec.name = get<std::string>(j, "name", "");
  if (j.contains("generator")) {
    const auto& g = j.at("generator");
    check_keys(g, {"kind", "c", "train_per_corner", "test_per_corner", "seed", "shared_noise"}, "dataset.generator");
    if (get<std::string>(g, "kind", "noisy-xor") != "noisy-xor") {
      throw InvalidInput("the only dataset generator is noisy-xor");
    }
    NoisyXorConfig cfg;
    cfg.c = get(g, "c", cfg.c);
    cfg.train_per_corner = get(g, "train_per_corner", cfg.train_per_corner);
    cfg.test_per_corner = get(g, "test_per_corner", cfg.test_per_corner);
    cfg.seed = get(g, "seed", cfg.seed);
    cfg.shared_noise = get(g, "shared_noise", cfg.shared_noise);
    spec.generator = cfg;
    if (spec.name.empty()) spec.name = "noisy-xor";
    return spec;
  }
  spec.generator.reset();
  if (!j.contains("train") || !j.contains("test")) {
    throw InvalidInput("dataset needs either a generator or train and test files");
  }
  spec.train = resolve(base, j.at("train").get<std::string>());
  spec.test = resolve(base, j.at("test").get<std::string>());
  if (j.contains("manifest")) spec.manifest = resolve(base, j.at("manifest").get<std::string>());
  spec.standardize = get(j, "standardize", false);
  if (spec.name.empty()) spec.name = spec.train.parent_path().filename().string();
  return spec;
}

json DatasetSpec::to_json() const {
  json j;
  j["name"] = name;
  if (generator) {
    j["generator"] = {{"kind", "noisy-xor"},
                      {"c", generator->c},
                      {"train_per_corner", generator->train_per_corner},
                      {"test_per_corner", generator->test_per_corner},
                      {"seed", generator->seed},
                      {"shared_noise", generator->shared_noise}};
    return j;
  }
  j["train"] = train.string();
  j["test"] = test.string();
  if (!manifest.empty()) j["manifest"] = manifest.string();
  j["standardize"] = standardize;
  return j;
}

SamplerSpec SamplerSpec::from_json(const json& j) {
  check_keys(j, {"kind", "proposal_variance", "leapfrog_steps", "step_size", "temperatures", "beta"}, "sampler");
  SamplerSpec s;
  s.kind = parse_sampler(get<std::string>(j, "kind", "MH"));
  s.mh.proposal_variance = get(j, "proposal_variance", s.mh.proposal_variance);
  s.hmc.leapfrog_steps = get(j, "leapfrog_steps", s.hmc.leapfrog_steps);
  s.hmc.step_size = get(j, "step_size", s.hmc.step_size);
  s.pp.temperatures = get(j, "temperatures", std::vector<double>(10, 1.0));
  s.pp.beta = get(j, "beta", s.pp.beta);
  s.pp.within_chain = s.mh;
  return s;
}

json SamplerSpec::to_json() const {
  json j;
  j["kind"] = std::string(to_string(kind));
  switch (kind) {
    case SamplerKind::MH: j["proposal_variance"] = mh.proposal_variance; break;
    case SamplerKind::HMC:
      j["leapfrog_steps"] = hmc.leapfrog_steps;
      j["step_size"] = hmc.step_size;
      break;
    case SamplerKind::PP:
      j["proposal_variance"] = pp.within_chain.proposal_variance;
      j["temperatures"] = pp.temperatures;
      j["beta"] = pp.beta;
      break;
  }
  return j;
}

void ExperimentConfig::validate() const {
  (void)arch();
  if (!(prior_variance > 0.0)) throw InvalidInput("prior_variance must be positive");
  if (chains < 1) throw InvalidInput("at least one chain is needed");
  if (iterations < 1) throw InvalidInput("iterations must be positive");
  if (burnin >= iterations) throw InvalidInput("burnin must be smaller than iterations");
  if (tail < 1) throw InvalidInput("tail must be positive");
  switch (sampler.kind) {
    case SamplerKind::MH: bnn::validate(sampler.mh); break;
    case SamplerKind::HMC: bnn::validate(sampler.hmc); break;
    case SamplerKind::PP: bnn::validate(sampler.pp); break;
  }
  if (dataset.generator) bnn::validate(*dataset.generator);
}

std::string ExperimentConfig::run_name() const {
  if (!name.empty()) return name;
  std::string s = dataset.name + "_" + std::string(to_string(sampler.kind));
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base) {
  try {
    check_keys(j,
               {"name", "notes", "dataset", "architecture", "hidden_activation", "prior_variance", "sampler", "chains",
                "iterations", "burnin", "tail", "seed", "sgd"},
               "experiment config");
    ExperimentConfig c;
    c.name = get<std::string>(j, "name", "");
    if (j.contains("dataset")) c.dataset = DatasetSpec::from_json(j.at("dataset"), base);
    c.architecture = get(j, "architecture", c.architecture);
    c.hidden_activation = parse_activation(get<std::string>(j, "hidden_activation", "sigmoid"));
    c.prior_variance = get(j, "prior_variance", c.prior_variance);
    if (j.contains("sampler")) c.sampler = SamplerSpec::from_json(j.at("sampler"));
    c.chains = get(j, "chains", c.chains);
    c.iterations = get(j, "iterations", c.iterations);
    c.burnin = get(j, "burnin", c.burnin);
    c.tail = get(j, "tail", c.tail);
    c.seed = get(j, "seed", c.seed);
    if (j.contains("sgd")) {
      const auto& s = j.at("sgd");
      check_keys(s,
                 {"epochs", "batch_size", "learning_rate", "accept_threshold", "ensemble_size", "max_sessions"},
                 "sgd");
      c.sgd.epochs = get(s, "epochs", c.sgd.epochs);
      c.sgd.batch_size = get(s, "batch_size", c.sgd.batch_size);
      c.sgd.learning_rate = get(s, "learning_rate", c.sgd.learning_rate);
      c.sgd.accept_threshold = get(s, "accept_threshold", c.sgd.accept_threshold);
      c.sgd.ensemble_size = get(s, "ensemble_size", c.sgd.ensemble_size);
      c.sgd.max_sessions = get(s, "max_sessions", c.sgd.max_sessions);
    }
    c.sgd.prior_variance = c.prior_variance;
    return c;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed experiment config: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  return from_json(read_json(path), fs::absolute(path).parent_path());
}

json ExperimentConfig::to_json() const {
  json j;
  if (!name.empty()) j["name"] = name;
  j["dataset"] = dataset.to_json();
  j["architecture"] = architecture;
  j["hidden_activation"] = std::string(to_string(hidden_activation));
  j["prior_variance"] = prior_variance;
  j["sampler"] = sampler.to_json();
  j["chains"] = chains;
  j["iterations"] = iterations;
  j["burnin"] = burnin;
  j["tail"] = tail;
  j["seed"] = seed;
  j["sgd"] = {{"epochs", sgd.epochs},
              {"batch_size", sgd.batch_size},
              {"learning_rate", sgd.learning_rate},
              {"accept_threshold", sgd.accept_threshold},
              {"ensemble_size", sgd.ensemble_size},
              {"max_sessions", sgd.max_sessions}};
  return j;
}

TrainTestSplit load_dataset(const DatasetSpec& spec) {
  if (spec.generator) return generate_noisy_xor(*spec.generator);
  const fs::path manifest_path = spec.manifest.empty() ? spec.train.parent_path() / "manifest.json" : spec.manifest;
  const auto manifest = EncodingManifest::load(manifest_path);
  TrainTestSplit split{load_csv_dataset(spec.train, manifest, DatasetRole::Train),
                       load_csv_dataset(spec.test, manifest, DatasetRole::Test)};
  if (spec.standardize) split = standardize_jointly(split, manifest.standardize_mask()).first;
  return split;
}

std::uint64_t chain_seed(const ExperimentConfig& config, std::size_t index) { return derive_seed(config.seed, index); }

std::vector<Vector> initial_states(const ExperimentConfig& config, std::size_t index, std::size_t count) {
  Rng rng(chain_seed(config, index) ^ kInitStream);
  const auto n = static_cast<Eigen::Index>(config.arch().parameter_count());
  std::vector<Vector> states;
  for (std::size_t k = 0; k < count; ++k) states.push_back(draw_from_prior(rng, n, config.prior_variance));
  return states;
}

std::string chain_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "chain_%02zu.csv", index + 1);
  return buf;
}

Chain run_chain(const ExperimentConfig& config, const PosteriorModel& model, std::size_t index) {
  const auto seed = chain_seed(config, index);
  const auto& s = config.sampler;
  switch (s.kind) {
    case SamplerKind::MH:
      return mh_chain(make_target(model), initial_states(config, index, 1)[0], s.mh, config.iterations, seed,
                      config.burnin);
    case SamplerKind::HMC:
      return hmc_chain(make_target(model), initial_states(config, index, 1)[0], s.hmc, config.iterations, seed,
                       config.burnin);
    case SamplerKind::PP:
      return pp_chain(make_tempered_target(model), initial_states(config, index, s.pp.temperatures.size()), s.pp,
                      config.iterations, seed, config.burnin, false)
          .chain;
  }
  throw InvalidInput("unknown sampler");
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(jobs, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

std::vector<fs::path> sample_to_dir(const ExperimentConfig& config, const fs::path& out, unsigned jobs) {
  config.validate();
  fs::create_directories(out);
  const auto split = load_dataset(config.dataset);
  const PosteriorModel model(config.arch(), split.train, config.prior_variance);
  write_json(out / "config.json", config.to_json());

  std::vector<fs::path> files(config.chains);
  parallel_for(config.chains, jobs, [&](std::size_t i) {
    Chain chain;
    try {
      chain = run_chain(config, model, i);
    } catch (const Error& e) {
      throw Error(e.category(), "chain " + std::to_string(i + 1) + ": " + e.what());
    }
    files[i] = out / chain_file_name(i);
    write_chain_csv(files[i], chain.draws);
    write_json(metadata_path(files[i]), chain_metadata(chain, config.sampler.to_json()));
  });
  return files;
}

RunDir RunDir::open(const fs::path& dir) {
  RunDir run;
  run.dir = dir;
  const auto config_path = dir / "config.json";
  if (!fs::exists(config_path)) throw IoError("no config.json in " + dir.string());
  run.config = ExperimentConfig::load(config_path);
  for (std::size_t i = 0;; ++i) {
    const auto p = dir / chain_file_name(i);
    if (!fs::exists(p)) break;
    run.chain_files.push_back(p);
  }
  if (run.chain_files.empty()) throw IoError("no chain files in " + dir.string());
  return run;
}

std::vector<Chain> RunDir::load_chains() const {
  std::vector<Chain> chains;
  for (const auto& f : chain_files) chains.push_back(load_chain(f));
  return chains;
}

DiagnosticReport diagnose_chains(const std::vector<Chain>& chains, std::size_t burnin) {
  std::vector<RowMatrix> post;
  for (const auto& c : chains) {
    if (burnin >= c.iterations()) throw InvalidInput("burn-in leaves no draws to diagnose");
    post.push_back(c.draws.bottomRows(c.draws.rows() - static_cast<Eigen::Index>(burnin)));
  }
  for (const auto& p : post) {
    if (p.rows() != post.front().rows() || p.cols() != post.front().cols()) {
      throw InvalidInput("chains have mismatched shapes");
    }
  }
  return diagnose(post);
}

json AccuracySummary::to_json() const {
  return {{"per_chain", per_chain}, {"mean", mean}, {"median", median}, {"tail", tail}};
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

AccuracySummary summarize(std::vector<double> per_chain, std::size_t tail) {
  AccuracySummary s;
  s.tail = tail;
  double total = 0.0;
  for (double a : per_chain) total += a;
  s.mean = per_chain.empty() ? 0.0 : total / static_cast<double>(per_chain.size());
  s.median = median(per_chain);
  s.per_chain = std::move(per_chain);
  return s;
}

void write_prediction_csv(const fs::path& path, const PredictionReport& report,
                          const std::vector<std::string>& class_names) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  auto name = [&](int y) {
    return static_cast<std::size_t>(y) < class_names.size() ? class_names[y] : std::to_string(y);
  };
  out << "index,true,predicted,prob_predicted,prob_true\n";
  for (std::size_t i = 0; i < report.truth.size(); ++i) {
    out << i << ',' << name(report.truth[i]) << ',' << name(report.predicted[i]) << ','
        << csv::format_double(report.prob_predicted[i]) << ',' << csv::format_double(report.prob_true[i]) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_matrix_csv(const fs::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << csv::format_double(m(r, c));
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Matrix ground_truth_grid(const GridSpec& grid) {
  Matrix g(grid.resolution, grid.resolution);
  for (int r = 0; r < grid.resolution; ++r) {
    for (int c = 0; c < grid.resolution; ++c) {
      g(r, c) = exact_xor(grid.center(c) > 0.5 ? 1 : 0, grid.center(r) > 0.5 ? 1 : 0);
    }
  }
  return g;
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

std::string render_table(const std::string& title, const std::vector<TableRow>& rows) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %10s %10s %16s %16s\n", "Sampler", "PSRF", "ESS", "Accuracy(MCMC)",
                "Accuracy(Prior)");
  const std::string header = buf;
  const std::string rule(header.size() - 1, '-');
  if (!title.empty()) out << title << '\n';
  out << header << rule << '\n';
  for (const auto& r : rows) {
    const std::string psrf = std::isfinite(r.psrf) ? [&] {
      char b[32];
      std::snprintf(b, sizeof b, "%.4f", r.psrf);
      return std::string(b);
    }() : std::string("-");
    std::snprintf(buf, sizeof buf, "%-8s %10s %10.0f %16s %16s\n", r.sampler.c_str(), psrf.c_str(), r.ess,
                  r.accuracy ? format_percent(*r.accuracy).c_str() : "-",
                  r.prior_accuracy ? format_percent(*r.prior_accuracy).c_str() : "-");
    out << buf;
  }
  return out.str();
}

}  // namespace bnn::cli
