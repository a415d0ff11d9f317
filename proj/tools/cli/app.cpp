#include "app.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "bnn/chain_io.hpp"
#include "bnn/csv.hpp"
#include "bnn/error.hpp"
#include "experiment.hpp"

namespace bnn::cli {
namespace {

fs::path output_root() {
  const char* env = std::getenv(kOutputDirEnv);
  return env && *env ? fs::path(env) : fs::path("bnn_output");
}

unsigned default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

struct GenerateOptions {
  std::string dataset = "noisy-xor";
  std::string out;
  NoisyXorConfig xor_config;
  std::string data_dir = "data";
  std::string raw_train, raw_test, manifest;
  bool no_standardize = false;
};

void cmd_generate(const GenerateOptions& o, std::ostream& out) {
  const fs::path dir = o.out.empty() ? output_root() / o.dataset : fs::path(o.out);
  TrainTestSplit split;
  json stats_json;
  std::string name = o.dataset;
  if (o.dataset == "noisy-xor") {
    split = generate_noisy_xor(o.xor_config);
  } else {
    const fs::path base = fs::path(o.data_dir) / o.dataset;
    const fs::path train = o.raw_train.empty() ? base / "raw_train.csv" : fs::path(o.raw_train);
    const fs::path test = o.raw_test.empty() ? base / "raw_test.csv" : fs::path(o.raw_test);
    const fs::path manifest_path = o.manifest.empty() ? base / "manifest.json" : fs::path(o.manifest);
    const auto manifest = EncodingManifest::load(manifest_path);
    if (!manifest.name.empty()) name = manifest.name;
    split.train = load_csv_dataset(train, manifest, DatasetRole::Train);
    split.test = load_csv_dataset(test, manifest, DatasetRole::Test);
    if (!o.no_standardize) {
      auto [standardized, stats] = standardize_jointly(split, manifest.standardize_mask());
      split = std::move(standardized);
      stats_json = stats.to_json();
      stats_json["features"] = manifest.feature_names();
    }
  }
  fs::create_directories(dir);
  write_dataset_csv(dir / "train.csv", split.train);
  write_dataset_csv(dir / "test.csv", split.test);
  write_json(dir / "manifest.json", prepared_manifest(split.train, name).to_json());
  if (!stats_json.is_null()) write_json(dir / "standardization.json", stats_json);
  out << name << ": train " << split.train.size() << " rows, test " << split.test.size() << " rows, "
      << split.train.num_features() << " features -> " << dir.string() << '\n';
}

struct SampleOptions {
  std::string config;
  std::string out;
  std::optional<std::string> name, architecture, sampler, train, test, manifest;
  std::optional<double> proposal_variance, step_size, beta, prior_variance;
  std::optional<int> leapfrog_steps;
  std::vector<double> temperatures;
  std::optional<std::size_t> chains, iterations, burnin, tail;
  std::optional<std::uint64_t> seed;
  std::optional<bool> standardize;
  unsigned jobs = default_jobs();
};

ExperimentConfig resolve_config(const SampleOptions& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(o.config);
  if (o.name) c.name = *o.name;
  if (o.architecture) c.architecture = *o.architecture;
  if (o.sampler) {
    c.sampler.kind = parse_sampler(*o.sampler);
    if (c.sampler.kind == SamplerKind::PP && c.sampler.pp.temperatures.empty()) {
      c.sampler.pp.temperatures.assign(10, 1.0);
    }
  }
  if (o.proposal_variance) {
    c.sampler.mh.proposal_variance = *o.proposal_variance;
    c.sampler.pp.within_chain.proposal_variance = *o.proposal_variance;
  }
  if (o.leapfrog_steps) c.sampler.hmc.leapfrog_steps = *o.leapfrog_steps;
  if (o.step_size) c.sampler.hmc.step_size = *o.step_size;
  if (o.beta) c.sampler.pp.beta = *o.beta;
  if (!o.temperatures.empty()) c.sampler.pp.temperatures = o.temperatures;
  if (o.prior_variance) c.prior_variance = c.sgd.prior_variance = *o.prior_variance;
  if (o.chains) c.chains = *o.chains;
  if (o.iterations) c.iterations = *o.iterations;
  if (o.burnin) c.burnin = *o.burnin;
  if (o.tail) c.tail = *o.tail;
  if (o.seed) c.seed = *o.seed;
  if (o.train || o.test) {
    if (!o.train || !o.test) throw InvalidInput("--train and --test go together");
    c.dataset.generator.reset();
    c.dataset.train = fs::absolute(*o.train);
    c.dataset.test = fs::absolute(*o.test);
    c.dataset.manifest.clear();
    if (c.dataset.name == "noisy-xor") c.dataset.name = c.dataset.train.parent_path().filename().string();
  }
  if (o.manifest) c.dataset.manifest = fs::absolute(*o.manifest);
  if (o.standardize) c.dataset.standardize = *o.standardize;
  if (c.sampler.kind == SamplerKind::PP && c.sampler.pp.temperatures.empty()) c.sampler.pp.temperatures.assign(10, 1.0);
  c.validate();
  return c;
}

void cmd_sample(const SampleOptions& o, std::ostream& out) {
  const auto config = resolve_config(o);
  const fs::path dir = o.out.empty() ? output_root() / config.run_name() : fs::path(o.out);
  const auto files = sample_to_dir(config, dir, o.jobs);
  for (const auto& f : files) {
    const auto meta = read_json(metadata_path(f));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", meta.at("acceptance_rate").get<double>());
    out << f.filename().string() << ": acceptance " << buf << ", runtime " << meta.at("runtime").get<std::string>();
    if (meta.contains("divergences")) out << ", divergences " << meta.at("divergences").get<std::size_t>();
    if (meta.contains("swap_accepted")) {
      out << ", swaps " << meta.at("swap_accepted").get<std::size_t>() << "/"
          << meta.at("swap_attempts").get<std::size_t>();
    }
    out << '\n';
  }
  out << files.size() << " chains of " << config.iterations << " iterations -> " << dir.string() << '\n';
}

AccuracySummary posterior_accuracy(const RunDir& run, const std::vector<Chain>& chains, std::size_t tail,
                                   const LabeledDataset& test, const fs::path* write_dir) {
  const auto arch = run.config.arch();
  std::vector<double> per_chain;
  for (std::size_t i = 0; i < chains.size(); ++i) {
    const auto report = accuracy(arch, chains[i].tail(tail), test);
    per_chain.push_back(report.accuracy);
    if (write_dir) {
      auto name = chain_file_name(i);
      name.replace(0, 5, "predictions");
      write_prediction_csv(*write_dir / name, report, test.class_names);
    }
  }
  return summarize(std::move(per_chain), tail);
}

struct DiagnoseOptions {
  std::vector<std::string> runs;
  std::optional<std::size_t> burnin;
  bool with_accuracy = false;
  std::size_t prior_draws = 0;
  std::optional<std::uint64_t> prior_seed;
  std::string title;
};

void cmd_diagnose(const DiagnoseOptions& o, std::ostream& out) {
  std::vector<TableRow> rows;
  std::optional<double> prior;
  for (const auto& dir : o.runs) {
    const auto run = RunDir::open(dir);
    const auto chains = run.load_chains();
    const std::size_t burnin = o.burnin.value_or(run.config.burnin);
    const auto report = diagnose_chains(chains, burnin);
    json j = to_json(report);
    j["burnin"] = burnin;
    TableRow row;
    row.sampler = std::string(to_string(run.config.sampler.kind));
    row.psrf = report.psrf;
    row.ess = report.ess_mean;
    if (o.with_accuracy || o.prior_draws > 0) {
      const auto split = load_dataset(run.config.dataset);
      if (o.with_accuracy) {
        const auto acc = posterior_accuracy(run, chains, run.config.tail, split.test, nullptr);
        row.accuracy = acc.mean;
        j["accuracy"] = acc.to_json();
      }
      if (o.prior_draws > 0) {
        if (!prior) {
          prior = prior_predictive_accuracy(run.config.arch(), run.config.prior_variance, split.test, o.prior_draws,
                                            o.prior_seed.value_or(run.config.seed));
        }
        row.prior_accuracy = prior;
        j["prior_accuracy"] = *prior;
      }
    }
    write_json(fs::path(dir) / "diagnostics.json", j);
    rows.push_back(row);
  }
  out << render_table(o.title, rows);
}

struct PredictOptions {
  std::string run;
  std::optional<std::size_t> tail;
  bool prior = false;
  std::size_t draws = 10000;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void cmd_predict(const PredictOptions& o, std::ostream& out) {
  const auto run = RunDir::open(o.run);
  const fs::path dir = o.out.empty() ? run.dir : fs::path(o.out);
  fs::create_directories(dir);
  const auto split = load_dataset(run.config.dataset);
  if (o.prior) {
    const std::uint64_t seed = o.seed.value_or(run.config.seed);
    const auto report = prior_predictive(run.config.arch(), run.config.prior_variance, split.test, o.draws, seed);
    write_prediction_csv(dir / "prior_predictions.csv", report, split.test.class_names);
    write_json(dir / "prior_accuracy.json", {{"accuracy", report.accuracy}, {"draws", o.draws}, {"seed", seed}});
    out << "prior predictive accuracy: " << format_percent(report.accuracy) << '\n';
    return;
  }
  const auto chains = run.load_chains();
  const auto summary = posterior_accuracy(run, chains, o.tail.value_or(run.config.tail), split.test, &dir);
  write_json(dir / "accuracy.json", summary.to_json());
  for (std::size_t i = 0; i < summary.per_chain.size(); ++i) {
    out << "chain " << (i + 1) << ": " << format_percent(summary.per_chain[i]) << '\n';
  }
  out << "mean accuracy: " << format_percent(summary.mean) << '\n';
}

struct GridOptions {
  std::string run;
  std::size_t chain = 1;
  std::optional<std::size_t> tail;
  GridSpec grid;
  std::string out;
};

void cmd_grid(const GridOptions& o, std::ostream& out) {
  const auto run = RunDir::open(o.run);
  if (o.chain < 1 || o.chain > run.chain_files.size()) throw InvalidInput("--chain is out of range");
  const auto chain = load_chain(run.chain_files[o.chain - 1]);
  const Matrix g = grid_predictive(run.config.arch(), chain.tail(o.tail.value_or(run.config.tail)), o.grid);
  const fs::path dir = o.out.empty() ? run.dir : fs::path(o.out);
  fs::create_directories(dir);
  auto name = chain_file_name(o.chain - 1);
  name.replace(0, 5, "grid");
  write_matrix_csv(dir / name, g);
  write_matrix_csv(dir / "grid_truth.csv", ground_truth_grid(o.grid));
  out << o.grid.resolution << "x" << o.grid.resolution << " grid -> " << (dir / name).string() << '\n';
}

struct TracesOptions {
  std::string run;
  std::vector<std::size_t> coords;
  std::string out;
};

void cmd_traces(const TracesOptions& o, std::ostream& out) {
  const auto run = RunDir::open(o.run);
  const auto chains = run.load_chains();
  const fs::path dir = o.out.empty() ? run.dir : fs::path(o.out);
  fs::create_directories(dir);
  for (std::size_t k : o.coords) {
    if (k >= chains.front().dimension()) {
      throw InvalidInput("coordinate " + std::to_string(k) + " is out of range for " +
                         std::to_string(chains.front().dimension()) + " parameters");
    }
    char name[48];
    std::snprintf(name, sizeof name, "traces_theta_%02zu.csv", k);
    std::ofstream f(dir / name);
    if (!f) throw IoError("cannot write " + (dir / name).string());
    f << "iteration,burnin";
    for (std::size_t c = 0; c < chains.size(); ++c) f << ',' << chain_file_name(c).substr(0, 8);
    f << '\n';
    const std::size_t burnin = run.config.burnin;
    for (std::size_t t = 0; t < chains.front().iterations(); ++t) {
      f << (t + 1) << ',' << (t < burnin ? 1 : 0);
      for (const auto& c : chains) f << ',' << csv::format_double(c.draws(static_cast<Eigen::Index>(t), k));
      f << '\n';
    }
    out << name << '\n';
  }
}

struct BoxplotOptions {
  std::vector<std::string> runs;
  std::optional<std::size_t> tail;
  std::string out;
};

void cmd_boxplot(const BoxplotOptions& o, std::ostream& out) {
  const fs::path path = o.out.empty() ? fs::path(o.runs.front()) / "boxplot_accuracy.csv" : fs::path(o.out);
  std::ostringstream body;
  body << "sampler,chain,accuracy\n";
  for (const auto& dir : o.runs) {
    const auto run = RunDir::open(dir);
    const auto split = load_dataset(run.config.dataset);
    const auto chains = run.load_chains();
    const auto acc = posterior_accuracy(run, chains, o.tail.value_or(run.config.tail), split.test, nullptr);
    for (std::size_t i = 0; i < acc.per_chain.size(); ++i) {
      body << to_string(run.config.sampler.kind) << ',' << (i + 1) << ',' << format_percent(acc.per_chain[i]) << '\n';
    }
    out << to_string(run.config.sampler.kind) << ": median " << format_percent(acc.median) << '\n';
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << body.str();
}

struct SgdOptions {
  SampleOptions base;
  std::optional<int> epochs, batch_size, ensemble_size, max_sessions;
  std::optional<double> learning_rate, accept_threshold;
};

void cmd_sgd(const SgdOptions& o, std::ostream& out) {
  auto config = resolve_config(o.base);
  if (o.epochs) config.sgd.epochs = *o.epochs;
  if (o.batch_size) config.sgd.batch_size = *o.batch_size;
  if (o.ensemble_size) config.sgd.ensemble_size = *o.ensemble_size;
  if (o.max_sessions) config.sgd.max_sessions = *o.max_sessions;
  if (o.learning_rate) config.sgd.learning_rate = *o.learning_rate;
  if (o.accept_threshold) config.sgd.accept_threshold = *o.accept_threshold;
  validate(config.sgd);
  const auto split = load_dataset(config.dataset);
  const auto ensemble = sgd_ensemble(config.arch(), split.train, split.test, config.sgd, config.seed);

  const fs::path dir = o.base.out.empty() ? output_root() / (config.dataset.name + "_sgd") : fs::path(o.base.out);
  fs::create_directories(dir);
  RowMatrix thetas(static_cast<Eigen::Index>(ensemble.solutions.size()),
                   static_cast<Eigen::Index>(config.arch().parameter_count()));
  std::vector<double> accuracies;
  for (std::size_t i = 0; i < ensemble.solutions.size(); ++i) {
    thetas.row(static_cast<Eigen::Index>(i)) = ensemble.solutions[i].theta.transpose();
    accuracies.push_back(ensemble.solutions[i].test_accuracy);
  }
  write_chain_csv(dir / "sgd_solutions.csv", thetas);
  write_json(dir / "config.json", config.to_json());
  const auto summary = summarize(accuracies, 1);
  write_json(dir / "sgd_summary.json", {{"sessions", ensemble.sessions},
                                        {"accepted", ensemble.solutions.size()},
                                        {"accuracy", accuracies},
                                        {"mean_accuracy", summary.mean}});
  out << ensemble.solutions.size() << " solutions accepted from " << ensemble.sessions
      << " sessions, mean test accuracy " << format_percent(summary.mean) << '\n';
}

void add_run_overrides(CLI::App* sub, SampleOptions& o) {
  sub->add_option("--config", o.config, "Experiment config (JSON); flags override its fields")->check(CLI::ExistingFile);
  sub->add_option("--out", o.out, "Output directory");
  sub->add_option("--name", o.name, "Run name");
  sub->add_option("--architecture", o.architecture, "Layer widths, e.g. MLP(2,2,1)");
  sub->add_option("--sampler", o.sampler, "MH, HMC or PP");
  sub->add_option("--proposal-variance", o.proposal_variance, "MH proposal variance (also PP within-chain)");
  sub->add_option("--leapfrog-steps", o.leapfrog_steps, "HMC leapfrog steps");
  sub->add_option("--step-size", o.step_size, "HMC step size");
  sub->add_option("--beta", o.beta, "PP swap locality");
  sub->add_option("--temperatures", o.temperatures, "PP temperature schedule")->delimiter(',');
  sub->add_option("--prior-variance", o.prior_variance, "Prior variance");
  sub->add_option("--chains", o.chains, "Number of chains");
  sub->add_option("--iterations", o.iterations, "Iterations per chain, burn-in included");
  sub->add_option("--burnin", o.burnin, "Burn-in iterations");
  sub->add_option("--tail", o.tail, "Predictive tail length");
  sub->add_option("--seed", o.seed, "Base seed; chain i uses seed xor i");
  sub->add_option("--train", o.train, "Training CSV");
  sub->add_option("--test", o.test, "Test CSV");
  sub->add_option("--manifest", o.manifest, "Encoding manifest for --train/--test");
  sub->add_option("--standardize", o.standardize, "Standardize features jointly over train and test");
  sub->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

void print_error(std::ostream& err, std::string_view category, const std::string& message) {
  err << json{{"error", category}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian inference for small MLPs with MCMC", "bnn-mcmc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "bnn-mcmc 0.1.0");

  GenerateOptions gen;
  auto* g = app.add_subcommand("generate-data", "Write train/test CSVs and a manifest");
  g->add_option("--dataset", gen.dataset, "noisy-xor, or a directory name under --data-dir (penguins, hawks)");
  g->add_option("--out", gen.out, "Output directory");
  g->add_option("--c", gen.xor_config.c, "Noisy XOR offset, in (0.5, 1)");
  g->add_option("--train-per-corner", gen.xor_config.train_per_corner, "Training points per XOR corner");
  g->add_option("--test-per-corner", gen.xor_config.test_per_corner, "Test points per XOR corner");
  g->add_option("--seed", gen.xor_config.seed, "Generator seed");
  g->add_flag("--shared-noise", gen.xor_config.shared_noise, "Use one u for both coordinates of a point");
  g->add_option("--data-dir", gen.data_dir, "Directory holding raw datasets");
  g->add_option("--raw-train", gen.raw_train, "Raw training CSV");
  g->add_option("--raw-test", gen.raw_test, "Raw test CSV");
  g->add_option("--manifest", gen.manifest, "Encoding manifest");
  g->add_flag("--no-standardize", gen.no_standardize, "Keep raw feature scales");

  SampleOptions sample;
  auto* s = app.add_subcommand("sample", "Run MCMC chains and write chain files");
  add_run_overrides(s, sample);

  DiagnoseOptions diag;
  auto* d = app.add_subcommand("diagnose", "Multivariate PSRF and ESS for sampled runs");
  d->add_option("--run", diag.runs, "Run directory (repeatable)")->required();
  d->add_option("--burnin", diag.burnin, "Override the burn-in recorded in the run");
  d->add_flag("--accuracy", diag.with_accuracy, "Also report posterior predictive accuracy");
  d->add_option("--prior-draws", diag.prior_draws, "Prior predictive baseline draws (0 to skip)");
  d->add_option("--prior-seed", diag.prior_seed, "Seed for the prior baseline (default: the run seed)");
  d->add_option("--title", diag.title, "Table title");

  PredictOptions pred;
  auto* p = app.add_subcommand("predict", "Posterior (or prior) predictive accuracy");
  p->add_option("--run", pred.run, "Run directory")->required();
  p->add_option("--tail", pred.tail, "Number of final iterations used per chain");
  p->add_flag("--prior", pred.prior, "Use i.i.d. prior draws instead of the chains");
  p->add_option("--draws", pred.draws, "Prior draws")->check(CLI::PositiveNumber);
  p->add_option("--seed", pred.seed, "Prior draw seed (default: the run seed)");
  p->add_option("--out", pred.out, "Output directory (default: the run directory)");

  GridOptions grid;
  auto* gr = app.add_subcommand("grid", "Predictive probability heatmap over a square grid");
  gr->add_option("--run", grid.run, "Run directory")->required();
  gr->add_option("--chain", grid.chain, "Chain number (1-based)");
  gr->add_option("--tail", grid.tail, "Number of final iterations used");
  gr->add_option("--resolution", grid.grid.resolution, "Cells per side")->check(CLI::PositiveNumber);
  gr->add_option("--lo", grid.grid.lo, "Lower bound of both axes");
  gr->add_option("--hi", grid.grid.hi, "Upper bound of both axes");
  gr->add_option("--out", grid.out, "Output directory (default: the run directory)");

  TracesOptions traces;
  auto* t = app.add_subcommand("traces", "Per-iteration values of chosen coordinates");
  t->add_option("--run", traces.run, "Run directory")->required();
  t->add_option("--coord", traces.coords, "0-based coordinate index (repeatable)")->required()->delimiter(',');
  t->add_option("--out", traces.out, "Output directory (default: the run directory)");

  BoxplotOptions box;
  auto* b = app.add_subcommand("boxplot-data", "Per-chain predictive accuracies for boxplots");
  b->add_option("--run", box.runs, "Run directory (repeatable)")->required();
  b->add_option("--tail", box.tail, "Number of final iterations used per chain");
  b->add_option("--out", box.out, "Output CSV");

  SgdOptions sgd;
  auto* e = app.add_subcommand("sgd-ensemble", "Ensemble of SGD solutions above an accuracy threshold");
  add_run_overrides(e, sgd.base);
  e->add_option("--epochs", sgd.epochs, "Epochs per session");
  e->add_option("--batch-size", sgd.batch_size, "Minibatch size");
  e->add_option("--learning-rate", sgd.learning_rate, "Learning rate");
  e->add_option("--accept-threshold", sgd.accept_threshold, "Minimum test accuracy (fraction)");
  e->add_option("--ensemble-size", sgd.ensemble_size, "Number of accepted solutions");
  e->add_option("--max-sessions", sgd.max_sessions, "Give up after this many sessions");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, to_string(ErrorCategory::InvalidInput), e.what());
    return static_cast<int>(ErrorCategory::InvalidInput);
  }

  try {
    if (*g) cmd_generate(gen, out);
    if (*s) cmd_sample(sample, out);
    if (*d) cmd_diagnose(diag, out);
    if (*p) cmd_predict(pred, out);
    if (*gr) cmd_grid(grid, out);
    if (*t) cmd_traces(traces, out);
    if (*b) cmd_boxplot(box, out);
    if (*e) cmd_sgd(sgd, out);
  } catch (const Error& ex) {
    print_error(err, to_string(ex.category()), ex.what());
    return static_cast<int>(ex.category());
  } catch (const fs::filesystem_error& ex) {
    print_error(err, to_string(ErrorCategory::Io), ex.what());
    return static_cast<int>(ErrorCategory::Io);
  } catch (const std::exception& ex) {
    print_error(err, "internal", ex.what());
    return 1;
  }
  return 0;
}

}  // namespace bnn::cli
