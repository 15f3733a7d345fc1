// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "ogc/threshold.hpp"

using namespace ogc;
using doctest::Approx;

namespace {
GmmFit separated() {
  GmmFit f;
  f.clean = {0.5, 0.2, 0.6};
  f.noise = {3.0, 0.5, 0.4};
  f.support_lo = 0.0;
  f.support_hi = 5.0;
  return f;
}
}  // namespace

TEST_CASE("ratio degenerate cases") {
  GmmFit f = separated();
  f.noise = f.clean;
  const auto grid = QuadratureGrid::over_support(f);
  for (double tau : {1.0, 2.0, 50.0}) CHECK(estimate_ratio(f, BaseLoss::ce(), tau, grid).ratio == Approx(1.0));
  const GmmFit s = separated();
  CHECK(estimate_ratio(s, BaseLoss::ce(), 1.0, QuadratureGrid::over_support(s)).ratio == Approx(1.0));
  CHECK(estimate_ratio(s, BaseLoss::ce(), 5.0, QuadratureGrid::over_support(s)).ratio > 1.5);
}

TEST_CASE("ratio vs Monte Carlo") {
  const GmmFit f = separated();
  const double tau = 5.0;
  std::mt19937_64 rng(17);
  auto mc = [&](const GaussianComponent& c) {
    std::normal_distribution<double> n(c.mean, c.std);
    double s = 0.0;
    int k = 0;
    while (k < 1000000) {
      const double h = n(rng);
      if (h < f.support_lo || h > f.support_hi) continue;
      s += std::min(std::exp(h), tau);
      ++k;
    }
    return s / k;
  };
  const double ref = mc(f.noise) / mc(f.clean);
  const double q = estimate_ratio(f, BaseLoss::ce(), tau, QuadratureGrid::over_support(f)).ratio;
  CHECK(std::abs(q - ref) / ref <= 1e-2);
}

TEST_CASE("upper bound on tau") {
  const GmmFit f = separated();
  CHECK(tau_upper_bound(f, BaseLoss::ce()) == Approx(std::exp(5.0)));
  GmmFit wide = f;
  wide.support_hi = 40.0;
  CHECK(tau_upper_bound(wide, BaseLoss::ce()) == kTauCap);
  CHECK(tau_upper_bound(f, BaseLoss::mae()) == 1.0);
}

TEST_CASE("solver") {
  const GmmFit f = separated();
  const auto grid = QuadratureGrid::over_support(f);
  const auto sol = solve_threshold(f, BaseLoss::ce(), 0.5, grid);
  REQUIRE(sol.status == SolveStatus::Solved);
  const RatioEstimator r(f, BaseLoss::ce(), grid);
  CHECK(std::abs(r(sol.tau) - 1.5) <= 1e-3);
  // dense grid: nothing below the solution reaches the target
  for (int i = 0; i < 10000; ++i) {
    const double tau = std::exp(std::log(sol.tau) * i / 10000.0);
    REQUIRE(r(tau) < 1.5 + 1e-9);
  }
  const auto inf = solve_threshold(f, BaseLoss::ce(), 1e12, grid);
  CHECK(inf.status == SolveStatus::Unattainable);
  CHECK(inf.tau == inf.tau_max);
  GmmFit same = f;
  same.noise = same.clean;
  CHECK(solve_threshold(same, BaseLoss::ce(), 0.5, grid).status == SolveStatus::Unattainable);
  CHECK_THROWS(solve_threshold(f, BaseLoss::ce(), 0.0, grid));
}

TEST_CASE("solver with GCE and FL") {
  const GmmFit f = separated();
  const auto grid = QuadratureGrid::over_support(f);
  for (const auto& base : {BaseLoss::gce(0.7), BaseLoss::focal(0.5)}) {
    const auto sol = solve_threshold(f, base, 0.2, grid);
    CHECK(sol.tau >= 1.0);
    CHECK(sol.tau <= sol.tau_max);
    if (sol.status == SolveStatus::Solved) CHECK(std::abs(sol.ratio - 1.2) <= 1e-3);
  }
}

TEST_CASE("manual schedules") {
  const BaseLoss ce = BaseLoss::ce();
  const ThresholdStrategy lin = LinearStrategy{10.0, 100};
  ThresholdState st = initial_threshold_state(lin);
  CHECK(schedule_next(lin, st, 0, 0.1, std::nullopt, ce).current_tau == Approx(10.0));
  CHECK(schedule_next(lin, st, 95, 0.1, std::nullopt, ce).current_tau == 1.0);
  CHECK(schedule_next(lin, st, 50, 0.1, std::nullopt, ce).current_tau == Approx(5.0));

  const ThresholdStrategy fixed = FixedStrategy{2.0};
  st = initial_threshold_state(fixed);
  CHECK(st.current_tau == 2.0);
  CHECK(schedule_next(fixed, st, 64, 0.1, separated(), ce).current_tau == 2.0);

  const ThresholdStrategy ema = EmaStrategy{0.5};
  st = initial_threshold_state(ema);
  CHECK(st.current_tau == kTauCap);
  st = schedule_next(ema, st, 32, 0.1, std::nullopt, ce);
  CHECK(st.current_tau == Approx(1.0 / (0.5 / kTauCap + 0.5)));
}

TEST_CASE("optimized strategy") {
  const ThresholdStrategy opt = OptimizedStrategy{20.0};
  ThresholdState st = initial_threshold_state(opt);
  CHECK(st.current_tau == kTauCap);
  st.current_tau = 3.0;
  const auto kept = schedule_next(opt, st, 64, 0.1, std::nullopt, BaseLoss::ce());
  CHECK(kept.current_tau == 3.0);
  CHECK(kept.status == SolveStatus::CarriedForward);
  // eps = lr * eps0
  const auto next = schedule_next(opt, st, 64, 0.025, separated(), BaseLoss::ce());
  CHECK(next.status == SolveStatus::Solved);
  CHECK(std::abs(next.ratio - 1.5) <= 1e-3);
  CHECK(strategy_name(opt) == "optimized");
}
