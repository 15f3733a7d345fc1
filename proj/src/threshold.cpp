// SPDX-License-Identifier: Apache-2.0

#include "ogc/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ogc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool same_component(const GaussianComponent& a, const GaussianComponent& b) {
  return a.mean == b.mean && a.std == b.std;
}

}  // namespace

QuadratureGrid QuadratureGrid::over_support(const GmmFit& fit, int bins) {
  return {bins, fit.support_lo, fit.support_hi};
}

RatioEstimator::RatioEstimator(const GmmFit& fit, const BaseLoss& base, const QuadratureGrid& grid) {
  if (grid.bins < 64) throw std::invalid_argument("quadrature grid needs at least 64 bins");
  if (grid.lo < 0.0) throw std::invalid_argument("quadrature grid must start at H >= 0");
  if (!(grid.lo < grid.hi) || !(fit.support_lo < fit.support_hi) ||
      same_component(fit.clean, fit.noise)) {
    degenerate_ = true;
    return;
  }
  const double lo = std::max(grid.lo, fit.support_lo);
  const double hi = std::min(grid.hi, fit.support_hi);
  const double width = (grid.hi - grid.lo) / grid.bins;
  grad_.reserve(grid.bins);
  clean_w_.reserve(grid.bins);
  noise_w_.reserve(grid.bins);
  double sum_c = 0.0;
  double sum_n = 0.0;
  for (int i = 0; i < grid.bins; ++i) {
    const double h = grid.lo + (i + 0.5) * width;
    grad_.push_back(grad_norm(base, std::max(std::exp(-h), kProbFloor)));
    const double wc = lo < hi ? truncated_pdf(fit.clean, lo, hi, h) : 0.0;
    const double wn = lo < hi ? truncated_pdf(fit.noise, lo, hi, h) : 0.0;
    clean_w_.push_back(wc);
    noise_w_.push_back(wn);
    sum_c += wc;
    sum_n += wn;
  }
  if (!(sum_c > 1e-300)) throw std::runtime_error("clean component has no mass on the quadrature grid");
  if (!(sum_n > 1e-300)) throw std::runtime_error("noise component has no mass on the quadrature grid");
  // Self-normalize so each row of weights is a discrete distribution.
  for (double& w : clean_w_) w /= sum_c;
  for (double& w : noise_w_) w /= sum_n;
}

double RatioEstimator::operator()(double tau) const {
  if (degenerate_) return 1.0;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < grad_.size(); ++i) {
    const double g = std::min(grad_[i], tau);
    num += g * noise_w_[i];
    den += g * clean_w_[i];
  }
  if (!(den > 0.0)) throw std::runtime_error("clean expectation vanished");
  return num / den;
}

RatioEstimate estimate_ratio(const GmmFit& fit, const BaseLoss& base, double tau,
                             const QuadratureGrid& grid) {
  if (!(tau >= 1.0)) throw std::invalid_argument("clip threshold must be >= 1");
  return {tau, RatioEstimator(fit, base, grid)(tau)};
}

double tau_upper_bound(const GmmFit& fit, const BaseLoss& base) {
  const double p = std::max(std::exp(-std::max(fit.support_hi, 0.0)), kProbFloor);
  return std::clamp(grad_norm(base, p), 1.0, kTauCap);
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Solved: return "solved";
    case SolveStatus::Unattainable: return "unattainable";
    case SolveStatus::AtLowerBound: return "at_lower_bound";
    case SolveStatus::NonMonotone: return "non_monotone";
    case SolveStatus::CarriedForward: return "carried_forward";
  }
  return "?";
}

ThresholdSolution solve_threshold(const GmmFit& fit, const BaseLoss& base, double epsilon,
                                  const QuadratureGrid& grid) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  const RatioEstimator ratio(fit, base, grid);
  const double target = 1.0 + epsilon;
  ThresholdSolution sol;
  sol.tau_max = tau_upper_bound(fit, base);

  const double r_max = ratio(sol.tau_max);
  const double r_min = ratio(1.0);
  sol.evaluations = 2;
  if (!(r_max >= target)) {
    sol.tau = sol.tau_max;
    sol.ratio = r_max;
    sol.status = SolveStatus::Unattainable;
    return sol;
  }
  if (r_min >= target) {
    sol.tau = 1.0;
    sol.ratio = r_min;
    sol.status = SolveStatus::AtLowerBound;
    return sol;
  }

  // Bisection works in log(tau); the bracket is checked for monotonicity first.
  const double log_hi = std::log(sol.tau_max);
  constexpr int kScan = 64;
  double prev = r_min;
  bool monotone = true;
  for (int i = 1; i <= kScan; ++i) {
    const double r = ratio(std::exp(log_hi * i / kScan));
    ++sol.evaluations;
    if (r < prev * (1.0 - 1e-12)) {
      monotone = false;
      break;
    }
    prev = r;
  }

  if (!monotone) {
    constexpr int kFallback = 1024;
    double best_tau = 1.0;
    double best_r = r_min;
    for (int i = 0; i <= kFallback; ++i) {
      const double tau = std::exp(log_hi * i / kFallback);
      const double r = ratio(tau);
      ++sol.evaluations;
      if (std::abs(r - target) < std::abs(best_r - target)) {
        best_tau = tau;
        best_r = r;
      }
    }
    sol.tau = best_tau;
    sol.ratio = best_r;
    sol.status = SolveStatus::NonMonotone;
    return sol;
  }

  double lo = 0.0;
  double hi = log_hi;
  double r_hi = r_max;
  // Run the bracket down to rounding so the smallest feasible tau is found
  // even where the ratio is nearly flat.
  for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double r = ratio(std::exp(mid));
    ++sol.evaluations;
    if (r >= target) {
      hi = mid;
      r_hi = r;
    } else {
      lo = mid;
    }
  }
  sol.tau = std::exp(hi);
  sol.ratio = r_hi;
  sol.status = SolveStatus::Solved;
  return sol;
}

std::string strategy_name(const ThresholdStrategy& s) {
  return std::visit(overloaded{
                        [](const OptimizedStrategy&) { return std::string("optimized"); },
                        [](const FixedStrategy&) { return std::string("fixed"); },
                        [](const LinearStrategy&) { return std::string("linear"); },
                        [](const EmaStrategy&) { return std::string("ema"); },
                    },
                    s);
}

ThresholdState initial_threshold_state(const ThresholdStrategy& strategy) {
  ThresholdState st;
  st.current_tau = std::visit(overloaded{
                                  [](const OptimizedStrategy&) { return kTauCap; },
                                  [](const FixedStrategy& f) { return std::clamp(f.tau, 1.0, kTauCap); },
                                  [](const LinearStrategy& l) { return std::clamp(l.beta, 1.0, kTauCap); },
                                  [](const EmaStrategy&) { return kTauCap; },
                              },
                              strategy);
  return st;
}

ThresholdState schedule_next(const ThresholdStrategy& strategy, const ThresholdState& state, long t,
                             double lr, const std::optional<GmmFit>& fit, const BaseLoss& base,
                             int bins) {
  if (t < 0) throw std::invalid_argument("step must be >= 0");
  ThresholdState next = state;
  next.step = t;
  next.status = SolveStatus::CarriedForward;

  auto diagnose = [&](double tau) {
    next.current_tau = tau;
    if (fit) {
      next.ratio = estimate_ratio(*fit, base, tau, QuadratureGrid::over_support(*fit, bins)).ratio;
      next.status = SolveStatus::Solved;
    }
  };

  std::visit(overloaded{
                 [&](const FixedStrategy& f) { diagnose(std::clamp(f.tau, 1.0, kTauCap)); },
                 [&](const LinearStrategy& l) {
                   if (l.total_steps <= 0) throw std::invalid_argument("linear schedule needs total_steps > 0");
                   const double frac = static_cast<double>(t) / static_cast<double>(l.total_steps);
                   diagnose(std::clamp(l.beta * (1.0 - frac), 1.0, kTauCap));
                 },
                 [&](const EmaStrategy& e) {
                   const double inv = e.alpha / state.current_tau + (1.0 - e.alpha);
                   diagnose(std::clamp(1.0 / inv, 1.0, kTauCap));
                 },
                 [&](const OptimizedStrategy& o) {
                   if (!fit) return;
                   const ThresholdSolution sol =
                       solve_threshold(*fit, base, lr * o.epsilon0, QuadratureGrid::over_support(*fit, bins));
                   next.current_tau = sol.tau;
                   next.ratio = sol.ratio;
                   next.status = sol.status;
                 },
             },
             strategy);
  return next;
}

}  // namespace ogc
