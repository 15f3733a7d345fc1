// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ogc/config.hpp"
#include "ogc/trainer.hpp"

namespace ogc {

inline constexpr const char* kMetricsHeader = "step,epoch,train_acc,test_acc,tau,ratio,mu_c,sigma_c,mu_n,sigma_n,clip_frac";

/// Metrics series as CSV text (header kMetricsHeader).
std::string metrics_csv(const std::vector<MetricsRecord>& metrics);
void write_metrics_csv(const std::vector<MetricsRecord>& metrics, const std::filesystem::path& path);

/// `step,tau,ratio,true_ratio,status,warm` for every threshold update step.
void write_updates_csv(const std::vector<ThresholdUpdate>& updates, const std::filesystem::path& path);

/// One noise setting of a comparison table column.
struct SweepColumn {
  std::string name;
  std::string noise;
  double rate = 0.0;
};

/// Noise settings mirroring the threshold-comparison table:
/// sym_50, sym_80, asymmetric (0.4), dependent (0.4). The real-world column
/// has no synthetic counterpart and is reported as NA.
std::vector<SweepColumn> default_sweep_columns();

struct SweepRow {
  std::string method;
  std::vector<double> accuracies;  // one per column, last-10-epoch mean test accuracy in percent
  double average = 0.0;
};

struct SweepOptions {
  std::vector<std::string> strategies = {"fixed", "linear", "ema", "optimized"};
  std::vector<double> epsilon0s;  // when non-empty, sweep epsilon0 with the optimized strategy instead
  std::vector<SweepColumn> columns = default_sweep_columns();
  int jobs = 1;
};

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const SweepOptions& opt);

/// CSV `method,sym_50,sym_80,asymmetric,dependent,real,average`.
std::string sweep_csv(const std::vector<SweepRow>& rows, const std::vector<SweepColumn>& columns);

}  // namespace ogc
