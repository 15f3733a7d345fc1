// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ogc/config.hpp"

namespace ogc::checks {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Tolerances. Each check compares against these and nothing else.
inline constexpr double kBoundSlack = 1e-9;
inline constexpr double kMaeIdentityTol = 1e-12;
inline constexpr double kSlopeMatchRelTol = 1e-6;
inline constexpr double kFdRelTol = 1e-5;
inline constexpr double kFdScaleFloor = 1e-3;    // denominator floor of the relative FD error
inline constexpr double kClipNeighborhood = 1e-4;
inline constexpr double kMonteCarloRelTol = 1e-2;
inline constexpr double kBinDoublingRelTol = 1e-3;
inline constexpr double kSolverTol = 1e-3;
inline constexpr double kGmmMeanTol = 0.2;
inline constexpr double kGmmWeightTol = 0.1;
inline constexpr double kLogLikSlack = 1e-9;     // relative, per EM iteration
inline constexpr double kEmaClosedFormRelTol = 1e-12;
inline constexpr double kControlTolPoints = 1.0; // eta = 0 control, accuracy points

/// Accuracy margin (percentage points) that CE with optimized clipping must
/// beat plain CE by in the blob run. Frozen from the 5-seed calibration
/// produced by `ogc_calibrate`.
extern const double kEndToEndMargin;

// Time budgets, seconds.
inline constexpr double kBudgetBounds = 5.0;
inline constexpr double kBudgetGmm = 1.0;
inline constexpr double kBudgetTheorems = 30.0;
inline constexpr double kBudgetEndToEnd = 300.0;

CheckResult proposition_bounds(std::uint64_t seed = 1);
CheckResult huberization();
CheckResult logit_gradient(std::uint64_t seed = 3);
CheckResult ratio_quadrature(std::uint64_t seed = 4);
CheckResult threshold_solver(std::uint64_t seed = 5);
CheckResult gmm_recovery(std::uint64_t seed = 6);
CheckResult excess_risk_bounds();
CheckResult end_to_end();
CheckResult schedule_semantics();
CheckResult determinism();

/// Blob task used by the end-to-end check: binary 2-D blobs, small MLP,
/// 1500 epochs. `clipping` selects optimized clipping over plain CE.
ExperimentConfig end_to_end_config(std::uint64_t seed, double eta, bool clipping);

/// Runs every check; the end-to-end run is skipped unless `full`.
std::vector<CheckResult> run_all(bool full);

std::string format_result(const CheckResult& r);

}  // namespace ogc::checks
