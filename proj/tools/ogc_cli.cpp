// SPDX-License-Identifier: Apache-2.0
//
// ogc: command-line front end.
//
//   ogc [--config FILE] [--seed N] [--out-dir DIR] <train|sweep|corrupt|export-dist|verify> ...
//
// Exit codes: 0 ok, 1 runtime or config error, 2 config file missing,
// other nonzero values come from argument parsing.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "ogc/checks.hpp"
#include "ogc/config.hpp"
#include "ogc/metrics.hpp"
#include "ogc/model.hpp"
#include "ogc/trainer.hpp"

namespace fs = std::filesystem;

namespace {

struct MissingConfig : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

ogc::ExperimentConfig resolve_config(const Globals& g) {
  ogc::ExperimentConfig cfg;
  if (!g.config_path.empty()) {
    if (!fs::exists(g.config_path)) throw MissingConfig("config file not found: " + g.config_path);
    cfg = ogc::load_config(g.config_path);
  }
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

fs::path out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << s;
}

int cmd_train(const Globals& g) {
  const auto cfg = resolve_config(g);
  const auto res = ogc::train(cfg);
  ogc::write_metrics_csv(res.metrics, out_path(g, "metrics.csv"));
  ogc::write_updates_csv(res.updates, out_path(g, "updates.csv"));
  ogc::save_checkpoint(res.model, out_path(g, "model.ckpt"));
  write_text(out_path(g, "config.toml"), ogc::to_config_text(cfg));
  std::printf("steps=%ld final_test_acc=%.4f last10_test_acc=%.4f tau=%.6g\n", res.total_steps,
              res.metrics.back().test_acc, ogc::last_epochs_mean_accuracy(res.metrics, 10), res.metrics.back().tau);
  return 0;
}

int cmd_sweep(const Globals& g, const std::vector<std::string>& strategies, const std::vector<double>& eps0s,
              int jobs) {
  const auto cfg = resolve_config(g);
  ogc::SweepOptions opt;
  if (!strategies.empty()) opt.strategies = strategies;
  opt.epsilon0s = eps0s;
  opt.jobs = jobs;
  const auto rows = ogc::run_sweep(cfg, opt);
  const std::string csv = ogc::sweep_csv(rows, opt.columns);
  write_text(out_path(g, "sweep.csv"), csv);
  std::fputs(csv.c_str(), stdout);
  return 0;
}

int cmd_corrupt(const Globals& g) {
  const auto cfg = resolve_config(g);
  const auto data = ogc::prepare_data(cfg);
  const auto p = out_path(g, "corruption.csv");
  ogc::write_corruption_csv(data.train, p);
  std::printf("wrote %s (%zu rows, flip rate %.4f)\n", p.string().c_str(), data.train.data.size(),
              data.train.flip_rate());
  return 0;
}

int cmd_export(const Globals& g, const std::string& checkpoint, int epoch) {
  const auto cfg = resolve_config(g);
  const auto data = ogc::prepare_data(cfg);
  const auto p = out_path(g, "distribution.csv");
  if (!checkpoint.empty()) {
    ogc::export_distribution(ogc::load_checkpoint(checkpoint), data.train, cfg.base_loss(), p);
  } else {
    ogc::ExperimentConfig run = cfg;
    if (epoch > 0) run.epochs = std::min<long>(run.epochs, epoch);
    const auto res = ogc::train(run, data);
    ogc::export_distribution(res.model, data.train, cfg.base_loss(), p);
  }
  std::printf("wrote %s\n", p.string().c_str());
  return 0;
}

int cmd_verify(bool full) {
  int failed = 0;
  for (const auto& r : ogc::checks::run_all(full)) {
    std::printf("%s\n", ogc::checks::format_result(r).c_str());
    std::fflush(stdout);
    failed += r.passed ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimized gradient clipping for noisy-label training"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "flat key = value config file");
  auto* seed_opt = app.add_option("--seed", seed, "model/minibatch seed (overrides the config)");
  app.add_option("--out-dir", g.out_dir, "directory for output files")->capture_default_str();

  auto* train = app.add_subcommand("train", "run one configuration");

  auto* sweep = app.add_subcommand("sweep", "grid over strategies or epsilon0 values");
  std::vector<std::string> strategies;
  std::vector<double> eps0s;
  int jobs = 1;
  sweep->add_option("--strategies", strategies, "threshold strategies")
      ->delimiter(',')
      ->check(CLI::IsMember({"fixed", "linear", "ema", "optimized", "none"}));
  sweep->add_option("--eps0", eps0s, "epsilon0 values for the optimized strategy")->delimiter(',');
  sweep->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);

  auto* corrupt = app.add_subcommand("corrupt", "write the corrupted-label CSV");

  auto* exp = app.add_subcommand("export-dist", "dump per-sample H and gradient norms");
  std::string checkpoint;
  int epoch = 0;
  exp->add_option("--checkpoint", checkpoint, "model checkpoint; trains from scratch if omitted");
  exp->add_option("--epoch", epoch, "train this many epochs before dumping")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "run the acceptance checks");
  bool full = false;
  verify->add_flag("--full", full, "include the 1500-epoch blob run");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) g.seed = seed;

  try {
    if (*train) return cmd_train(g);
    if (*sweep) return cmd_sweep(g, strategies, eps0s, jobs);
    if (*corrupt) return cmd_corrupt(g);
    if (*exp) return cmd_export(g, checkpoint, epoch);
    if (*verify) return cmd_verify(full);
  } catch (const MissingConfig& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ogc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
