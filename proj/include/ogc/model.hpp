// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace ogc {

/// Weight (out x in, row-major) and bias (out) of one dense layer.
struct LayerParams {
  std::vector<double> weight;
  std::vector<double> bias;
};

using ParamGrads = std::vector<LayerParams>;

/// Fully connected network d -> hidden... -> K with ReLU on hidden layers.
class MlpModel {
 public:
  MlpModel() = default;

  /// All parameters zero.
  static MlpModel zeros(std::vector<std::size_t> dims);
  /// Weights U(-sqrt(6/fan_in), sqrt(6/fan_in)), biases zero.
  static MlpModel he_uniform(std::vector<std::size_t> dims, std::uint64_t seed);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t num_classes() const { return dims_.back(); }
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t num_params() const;

  std::vector<LayerParams>& layers() { return layers_; }
  const std::vector<LayerParams>& layers() const { return layers_; }

  /// Zero-filled gradient buffers with this model's shapes.
  ParamGrads zero_grads() const;

 private:
  explicit MlpModel(std::vector<std::size_t> dims);

  std::vector<std::size_t> dims_;
  std::vector<LayerParams> layers_;
};

/// Per-layer activations kept for the backward pass. acts[0] is the input,
/// acts.back() the logits.
struct ForwardCache {
  std::vector<std::vector<double>> acts;
};

std::vector<double> forward(const MlpModel& model, std::span<const double> features);

/// Forward pass that keeps activations; returns a view of the logits.
std::span<const double> forward(const MlpModel& model, std::span<const double> features, ForwardCache& cache);

/// Accumulates (+=) parameter gradients for one sample into `grads`.
void backward(const MlpModel& model, const ForwardCache& cache, std::span<const double> grad_logits,
              ParamGrads& grads);

ParamGrads backward(const MlpModel& model, std::span<const double> features, std::span<const double> grad_logits);

double global_norm(const ParamGrads& grads);

class NonFiniteGradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OptimizerState {
  std::vector<LayerParams> momentum_buf;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double param_clip = 5.0;

  static OptimizerState for_model(const MlpModel& model, double lr, double momentum, double weight_decay,
                                  double param_clip);
};

struct StepReport {
  double grad_norm = 0.0;  // before clipping
  bool clipped = false;
};

/// Clips the loss gradient to `param_clip` in global l2 norm, then
/// buf = momentum * buf + grad + weight_decay * param; param -= lr * buf.
StepReport sgd_step(MlpModel& model, OptimizerState& opt, const ParamGrads& grads);

/// Piecewise-constant learning rate: initial * decay_factor^(milestones passed).
struct LrSchedule {
  double initial = 0.1;
  double decay_factor = 0.1;
  std::vector<int> milestones;

  double at(int epoch) const;
  void validate() const;
};

/// Binary checkpoint: u64 dim count, u64 dims, then per layer the weights
/// and biases as little-endian IEEE-754 doubles. All integers little-endian.
void save_checkpoint(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_checkpoint(const std::filesystem::path& path);

}  // namespace ogc
