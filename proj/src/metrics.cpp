// SPDX-License-Identifier: Apache-2.0

#include "ogc/metrics.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

namespace ogc {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

std::string metrics_csv(const std::vector<MetricsRecord>& metrics) {
  std::string s = std::string(kMetricsHeader) + "\n";
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& m : metrics) {
    const double mu_c = m.fit ? m.fit->clean.mean : nan;
    const double sd_c = m.fit ? m.fit->clean.std : nan;
    const double mu_n = m.fit ? m.fit->noise.mean : nan;
    const double sd_n = m.fit ? m.fit->noise.std : nan;
    s += std::to_string(m.step) + ',' + std::to_string(m.epoch) + ',' + num(m.train_acc) + ',' + num(m.test_acc) +
         ',' + num(m.tau) + ',' + num(m.ratio) + ',' + num(mu_c) + ',' + num(sd_c) + ',' + num(mu_n) + ',' +
         num(sd_n) + ',' + num(m.clip_frac) + '\n';
  }
  return s;
}

void write_metrics_csv(const std::vector<MetricsRecord>& metrics, const std::filesystem::path& path) {
  write_text(metrics_csv(metrics), path);
}

void write_updates_csv(const std::vector<ThresholdUpdate>& updates, const std::filesystem::path& path) {
  std::string s = "step,tau,ratio,true_ratio,status,warm\n";
  for (const auto& u : updates) {
    s += std::to_string(u.step) + ',' + num(u.tau) + ',' + num(u.ratio) + ',' + num(u.true_ratio) + ',' +
         to_string(u.status) + ',' + (u.warm ? "1" : "0") + '\n';
  }
  write_text(s, path);
}

std::vector<SweepColumn> default_sweep_columns() {
  return {{"sym_50", "symmetric", 0.5}, {"sym_80", "symmetric", 0.8}, {"asymmetric", "asymmetric", 0.4},
          {"dependent", "instance", 0.4}};
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const SweepOptions& opt) {
  struct Job {
    std::size_t row;
    std::size_t col;
    ExperimentConfig cfg;
  };
  std::vector<SweepRow> rows;
  std::vector<Job> jobs;
  auto add_row = [&](const std::string& method, ExperimentConfig cfg) {
    rows.push_back({method, std::vector<double>(opt.columns.size(), 0.0), 0.0});
    for (std::size_t c = 0; c < opt.columns.size(); ++c) {
      ExperimentConfig run = cfg;
      run.noise = opt.columns[c].noise;
      run.noise_rate = opt.columns[c].rate;
      run.validate();
      jobs.push_back({rows.size() - 1, c, run});
    }
  };
  if (!opt.epsilon0s.empty()) {
    for (double e : opt.epsilon0s) {
      ExperimentConfig cfg = base;
      cfg.strategy = "optimized";
      cfg.epsilon0 = e;
      add_row("optimized(eps0=" + num(e) + ")", cfg);
    }
  } else {
    for (const auto& s : opt.strategies) {
      ExperimentConfig cfg = base;
      cfg.strategy = s;
      add_row(s, cfg);
    }
  }

  // Every job owns its config, data and model; results land in distinct cells.
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        const TrainResult r = train(jobs[j].cfg);
        rows[jobs[j].row].accuracies[jobs[j].col] = 100.0 * last_epochs_mean_accuracy(r.metrics, 10);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, opt.jobs);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  for (auto& r : rows) {
    double s = 0.0;
    for (double a : r.accuracies) s += a;
    r.average = r.accuracies.empty() ? 0.0 : s / static_cast<double>(r.accuracies.size());
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, const std::vector<SweepColumn>& columns) {
  std::string s = "method";
  for (const auto& c : columns) s += "," + c.name;
  s += ",real,average\n";
  for (const auto& r : rows) {
    s += r.method;
    for (double a : r.accuracies) {
      char buf[32];
      std::snprintf(buf, sizeof buf, ",%.2f", a);
      s += buf;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, ",NA,%.2f\n", r.average);
    s += buf;
  }
  return s;
}

}  // namespace ogc
