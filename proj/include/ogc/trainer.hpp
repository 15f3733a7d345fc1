// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ogc/config.hpp"
#include "ogc/dataset.hpp"
#include "ogc/gmm.hpp"
#include "ogc/model.hpp"
#include "ogc/noisegen.hpp"
#include "ogc/threshold.hpp"

namespace ogc {

/// One row of the per-epoch metrics series.
struct MetricsRecord {
  long step = 0;  // global step at the end of the epoch
  int epoch = 0;
  double train_acc = 0.0;  // against the given (possibly corrupted) labels
  double test_acc = 0.0;
  double tau = 0.0;
  double ratio = 0.0;  // proxy ratio at tau from the latest fit, NaN before the first fit
  std::optional<GmmFit> fit;
  double clip_frac = 0.0;  // share of samples on the clipped branch this epoch
  double true_ratio = 0.0; // flip-mask ratio over the queue, NaN when unavailable
};

/// Recorded at every step with t mod s == 0.
struct ThresholdUpdate {
  long step = 0;
  double tau = 0.0;
  double ratio = 0.0;
  double true_ratio = 0.0;
  SolveStatus status = SolveStatus::CarriedForward;
  bool warm = false;  // queue held at least `warmup` values
};

struct PreparedData {
  CorruptedDataset train;
  Dataset test;
};

/// Builds the training set (with label noise applied) and the clean test set.
PreparedData prepare_data(const ExperimentConfig& cfg);

/// Sample order for one epoch; a pure function of (n, seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch);

std::vector<std::size_t> model_dims(const ExperimentConfig& cfg, const Dataset& data);

LrSchedule lr_schedule(const ExperimentConfig& cfg);

long steps_per_epoch(const ExperimentConfig& cfg, std::size_t n_train);

struct TrainHooks {
  /// Called after each epoch's update (epochs are 1-based here).
  std::function<void(int epoch, const MlpModel&)> on_epoch_end;
};

struct TrainResult {
  MlpModel model;
  std::vector<MetricsRecord> metrics;
  std::vector<ThresholdUpdate> updates;
  long total_steps = 0;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, long step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// Runs the clipped-loss training loop: per step the minibatch
/// cross-entropies enter the queue, every `time_frame` steps the mixture is
/// refitted and the threshold re-derived, otherwise it is carried forward.
TrainResult train(const ExperimentConfig& cfg, const PreparedData& data, const TrainHooks& hooks = {});
TrainResult train(const ExperimentConfig& cfg);

/// Argmax prediction; ties go to the lowest class index.
int predict(const MlpModel& model, std::span<const double> features);

double evaluate(const MlpModel& model, const Dataset& data);

/// Mean test accuracy over the last `n` epochs.
double last_epochs_mean_accuracy(const std::vector<MetricsRecord>& metrics, std::size_t n = 10);

/// CSV `index,H,grad_norm,flipped` for every training sample.
void export_distribution(const MlpModel& model, const CorruptedDataset& data, const BaseLoss& base,
                         const std::filesystem::path& path);

}  // namespace ogc
