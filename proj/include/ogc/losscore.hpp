// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ogc {

/// Probabilities are floored here before any log or division.
inline constexpr double kProbFloor = 1e-12;

/// Largest clipping threshold the library will ever emit.
inline constexpr double kTauCap = 1e6;

enum class LossKind { CE, FL, GCE, MAE };

/// A loss that depends only on the predicted probability of the given label.
struct BaseLoss {
  LossKind kind = LossKind::CE;
  double gamma = 0.0;  // focal exponent, FL only
  double q = 0.7;      // GCE exponent, GCE only

  static BaseLoss ce() { return {LossKind::CE, 0.0, 0.7}; }
  static BaseLoss focal(double gamma);
  static BaseLoss gce(double q);
  static BaseLoss mae() { return {LossKind::MAE, 0.0, 0.7}; }

  std::string name() const;
};

/// Parses "ce", "fl", "gce" or "mae" with the given parameters.
BaseLoss parse_base_loss(std::string_view name, double gamma, double q);

/// A probability vector: entries in [0,1] summing to 1 within 1e-6.
class ProbVector {
 public:
  explicit ProbVector(std::vector<double> probs);

  std::span<const double> values() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

 private:
  std::vector<double> probs_;
};

/// Base loss of the probability assigned to the given label.
/// MAE is reported as 1 - p_y, i.e. the one-hot L1 distance halved.
double loss_value(const BaseLoss& base, double p_y);

/// |d loss / d p_y|, the l2 norm of the probability gradient.
double grad_norm(const BaseLoss& base, double p_y);

/// Rescales w onto the tau-ball when its norm reaches tau.
std::vector<double> clip_vector(std::span<const double> w, double tau);

/// Probability at which grad_norm(base, p) == tau.
///
/// Returns 0 when the gradient norm never reaches tau (nothing is ever
/// clipped) and 1 when it is at or above tau on the whole domain.
double solve_clip_point(const BaseLoss& base, double tau);

/// A base loss with its probability gradient clipped at tau.
///
/// Below the clip point the loss continues along its tangent line, so the
/// slope magnitude there is exactly tau. For CE this is
/// 1 - tau * p + log(tau).
struct HuberizedLoss {
  BaseLoss base;
  double tau = 1.0;
  double clip_point = 1.0;

  /// Clamps tau into [1, tau_max] and solves for the clip point.
  static HuberizedLoss make(const BaseLoss& base, double tau, double tau_max = kTauCap);

  bool clips(double p_y) const { return p_y < clip_point; }
};

double huberized_value(const HuberizedLoss& hub, double p_y);

/// Derivative of huberized_value w.r.t. p_y (always <= 0).
double huberized_slope(const HuberizedLoss& hub, double p_y);

/// Probability-space gradient: only the component at y is nonzero.
std::vector<double> huberized_grad_probs(const HuberizedLoss& hub, const ProbVector& p,
                                         std::size_t y);

/// Gradient of huberized_value(softmax(logits)[y]) w.r.t. the logits.
std::vector<double> huberized_grad_logits(const HuberizedLoss& hub, std::span<const double> logits,
                                          std::size_t y);

/// Writes the logit gradient into `out` (size K). Returns p_y.
double huberized_grad_logits_into(const HuberizedLoss& hub, std::span<const double> logits,
                                  std::size_t y, std::span<double> out);

std::vector<double> softmax(std::span<const double> logits);

/// -log softmax(logits)[y], computed via log-sum-exp.
double ce_from_logits(std::span<const double> logits, std::size_t y);

double ce_from_probs(const ProbVector& p, std::size_t y);

/// Maps a cross-entropy value H to the base loss at p_y = exp(-H).
double phi_h_to_loss(const BaseLoss& base, double H);

}  // namespace ogc
