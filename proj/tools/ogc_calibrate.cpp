// SPDX-License-Identifier: Apache-2.0
//
// One-off calibration of the blob-run accuracy margin.
// The blob check compares both methods on one dataset (its seed 1), so the
// baseline spread is measured the same way: data and label noise stay those
// of the check, only the training seed (init and minibatch order) moves over
// 101..105. Prints margin = 2 * sample std of the plain CE last-10-epoch test
// accuracies; optimized-clipping accuracies are printed for reference only.

#include <cmath>
#include <cstdio>
#include <vector>

#include "ogc/checks.hpp"
#include "ogc/trainer.hpp"

int main() {
  std::vector<double> ce;
  for (std::uint64_t seed = 101; seed <= 105; ++seed) {
    auto run = [&](bool clipping) {
      ogc::ExperimentConfig cfg = ogc::checks::end_to_end_config(1, 0.4, clipping);
      cfg.seed = seed;
      return 100.0 * ogc::last_epochs_mean_accuracy(ogc::train(cfg).metrics, 10);
    };
    const double a = run(false);
    const double b = run(true);
    ce.push_back(a);
    std::printf("seed=%llu ce=%.2f ogc=%.2f gap=%.2f\n", static_cast<unsigned long long>(seed), a, b, b - a);
    std::fflush(stdout);
  }
  double mean = 0.0;
  for (double v : ce) mean += v;
  mean /= static_cast<double>(ce.size());
  double var = 0.0;
  for (double v : ce) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(ce.size() - 1));
  std::printf("ce mean=%.3f sd=%.3f margin=%.3f\n", mean, sd, 2.0 * sd);
  return 0;
}
