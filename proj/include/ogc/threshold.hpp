// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ogc/gmm.hpp"
#include "ogc/losscore.hpp"

namespace ogc {

/// Midpoint-rule grid over cross-entropy values (nats).
struct QuadratureGrid {
  int bins = 1024;
  double lo = 0.0;
  double hi = 1.0;

  static QuadratureGrid over_support(const GmmFit& fit, int bins = 1024);
};

struct RatioEstimate {
  double tau = 1.0;
  double ratio = 1.0;
};

/// Expected clipped gradient norm under the noise component divided by the
/// same under the clean component, both truncated to the fit's support.
///
/// Construction tabulates the integrand and the two densities once, so a
/// solver can evaluate many thresholds cheaply.
class RatioEstimator {
 public:
  RatioEstimator(const GmmFit& fit, const BaseLoss& base, const QuadratureGrid& grid);

  double operator()(double tau) const;

 private:
  std::vector<double> grad_;
  std::vector<double> clean_w_;
  std::vector<double> noise_w_;
  bool degenerate_ = false;
};

RatioEstimate estimate_ratio(const GmmFit& fit, const BaseLoss& base, double tau,
                             const QuadratureGrid& grid);

/// Largest gradient norm attainable on the fit's support, in [1, kTauCap].
double tau_upper_bound(const GmmFit& fit, const BaseLoss& base);

enum class SolveStatus {
  Solved,
  Unattainable,   // ratio stays below 1 + eps up to tau_max
  AtLowerBound,   // ratio already >= 1 + eps at tau = 1
  NonMonotone,    // grid fallback was used
  CarriedForward, // no fit available, previous threshold kept
};

std::string to_string(SolveStatus s);

struct ThresholdSolution {
  double tau = 1.0;
  double ratio = 1.0;
  double tau_max = 1.0;
  SolveStatus status = SolveStatus::Solved;
  int evaluations = 0;
};

inline constexpr double kRatioTolerance = 1e-3;

/// Smallest tau in [1, tau_max] whose ratio reaches 1 + epsilon.
ThresholdSolution solve_threshold(const GmmFit& fit, const BaseLoss& base, double epsilon,
                                  const QuadratureGrid& grid);

struct OptimizedStrategy {
  double epsilon0 = 20.0;
};
struct FixedStrategy {
  double tau = 2.0;
};
struct LinearStrategy {
  double beta = 10.0;
  long total_steps = 1;
};
struct EmaStrategy {
  double alpha = 0.9999;
};

using ThresholdStrategy = std::variant<OptimizedStrategy, FixedStrategy, LinearStrategy, EmaStrategy>;

std::string strategy_name(const ThresholdStrategy& s);

struct ThresholdState {
  double current_tau = kTauCap;
  long step = 0;
  double ratio = 1.0;  // proxy ratio at current_tau, when a fit was available
  SolveStatus status = SolveStatus::CarriedForward;
};

ThresholdState initial_threshold_state(const ThresholdStrategy& strategy);

/// Produces the threshold for step t. `fit` is required by the optimized
/// strategy; without it the previous threshold is carried forward. With a
/// fit, every strategy also reports the proxy ratio at its threshold.
ThresholdState schedule_next(const ThresholdStrategy& strategy, const ThresholdState& state, long t,
                             double lr, const std::optional<GmmFit>& fit, const BaseLoss& base,
                             int bins = 1024);

}  // namespace ogc
