// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ogc/losscore.hpp"
#include "ogc/noisegen.hpp"
#include "ogc/threshold.hpp"

namespace ogc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value in a flat key-value document.
using ConfigValue = std::variant<long, double, bool, std::string, std::vector<double>>;

/// Flat TOML-style document: `key = value` lines, `#` comments, values are
/// integers, floats, booleans, double-quoted strings or `[a, b, ...]`
/// arrays of numbers. Tables and nesting are rejected.
std::map<std::string, ConfigValue> parse_key_values(const std::string& text);

struct ExperimentConfig {
  // data
  std::string dataset = "blobs";  // blobs | moons | idx
  long n_train = 400;
  long n_test = 2000;
  long num_classes = 2;
  long dim = 2;
  double blob_radius = 1.0;
  double blob_spread = 0.6;
  double moons_noise = 0.2;
  std::string idx_train_images;
  std::string idx_train_labels;
  std::string idx_test_images;
  std::string idx_test_labels;

  // label noise
  std::string noise = "symmetric";  // none | symmetric | asymmetric | instance
  double noise_rate = 0.4;
  std::string asym_map = "circular";  // circular | cifar10
  long asym_group = 0;                // circular group size; 0 means all classes
  long instance_projections = 1;

  // loss and threshold
  std::string loss = "ce";
  double fl_gamma = 0.5;
  double gce_q = 0.7;
  std::string strategy = "optimized";  // optimized | fixed | linear | ema | none
  double epsilon0 = 20.0;
  double fixed_tau = 2.0;
  double linear_beta = 10.0;
  double ema_alpha = 0.9999;
  long queue_size = 4096;
  long time_frame = 32;
  long warmup = 512;
  long quad_bins = 1024;
  long em_max_iters = 100;
  double em_tol = 1e-6;

  // optimization
  long batch_size = 128;
  long epochs = 150;
  double lr = 0.1;
  double lr_decay = 0.1;
  std::vector<double> lr_milestones = {50, 100};
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double param_clip = 5.0;
  std::vector<double> hidden = {32, 32};

  // seeds
  std::uint64_t seed = 1;        // model init and minibatch order
  std::uint64_t data_seed = 7;   // synthetic data
  std::uint64_t noise_seed = 11; // label corruption

  /// Throws ConfigError on any inconsistent setting.
  void validate() const;

  BaseLoss base_loss() const;
  NoiseSpec noise_spec() const;
  bool uses_clipping() const { return strategy != "none"; }
  /// Threshold strategy; `total_steps` feeds the linear schedule.
  ThresholdStrategy threshold_strategy(long total_steps) const;
};

/// Applies the keys of `text` on top of the defaults. Unknown keys and type
/// mismatches are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Serializes every key, so that parse_config(to_config_text(c)) == c.
std::string to_config_text(const ExperimentConfig& cfg);

}  // namespace ogc
