// SPDX-License-Identifier: Apache-2.0

#include "ogc/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ogc {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] * (1.0 - frac) + sorted[i + 1] * frac;
}

double log_normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

struct Params {
  double w[2];
  double mu[2];
  double var[2];
};

Params init_params(const std::vector<double>& sorted, const EmConfig& cfg) {
  Params p{};
  const auto n = static_cast<double>(sorted.size());
  double mean = 0.0;
  for (double v : sorted) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : sorted) var += (v - mean) * (v - mean);
  var = std::max(var / n, cfg.variance_floor);

  p.mu[0] = quantile_sorted(sorted, 0.25);
  p.mu[1] = quantile_sorted(sorted, 0.75);
  if (cfg.init == EmInit::KMeans) {
    // Lloyd iterations on the line, seeded from the quartiles.
    for (int it = 0; it < 50; ++it) {
      const double cut = 0.5 * (p.mu[0] + p.mu[1]);
      double s[2] = {0.0, 0.0};
      double c[2] = {0.0, 0.0};
      for (double v : sorted) {
        const int k = v <= cut ? 0 : 1;
        s[k] += v;
        c[k] += 1.0;
      }
      if (c[0] == 0.0 || c[1] == 0.0) break;
      const double m0 = s[0] / c[0];
      const double m1 = s[1] / c[1];
      if (m0 == p.mu[0] && m1 == p.mu[1]) break;
      p.mu[0] = m0;
      p.mu[1] = m1;
    }
  }
  p.w[0] = p.w[1] = 0.5;
  p.var[0] = p.var[1] = var;
  return p;
}

}  // namespace

double normal_pdf(double x, double mean, double std) {
  const double z = (x - mean) / std;
  return std::exp(-0.5 * z * z) / (std * std::sqrt(2.0 * std::numbers::pi));
}

double normal_cdf(double x, double mean, double std) {
  return 0.5 * std::erfc(-(x - mean) / (std * std::numbers::sqrt2));
}

double truncated_pdf(const GaussianComponent& comp, double lo, double hi, double h) {
  if (!(lo < hi)) throw std::invalid_argument("truncation bounds must satisfy lo < hi");
  if (h < lo || h > hi) return 0.0;
  const double mass = normal_cdf(hi, comp.mean, comp.std) - normal_cdf(lo, comp.mean, comp.std);
  if (!(mass > 0.0)) {
    // The interval lies far in one tail; the truncated density is
    // concentrated at the nearer endpoint.
    return 0.0;
  }
  return normal_pdf(h, comp.mean, comp.std) / mass;
}

std::pair<double, double> responsibilities(const GmmFit& fit, double h) {
  double a;
  double b;
  if (fit.support_lo < fit.support_hi) {
    a = fit.clean.weight * truncated_pdf(fit.clean, fit.support_lo, fit.support_hi, h);
    b = fit.noise.weight * truncated_pdf(fit.noise, fit.support_lo, fit.support_hi, h);
  } else {
    a = fit.clean.weight * normal_pdf(h, fit.clean.mean, fit.clean.std);
    b = fit.noise.weight * normal_pdf(h, fit.noise.mean, fit.noise.std);
  }
  const double sum = a + b;
  if (!(sum > 0.0)) {
    // Both densities underflow: assign to the nearer mean.
    const bool clean = std::abs(h - fit.clean.mean) <= std::abs(h - fit.noise.mean);
    return clean ? std::pair{1.0, 0.0} : std::pair{0.0, 1.0};
  }
  return {a / sum, b / sum};
}

GmmFit fit_2gmm(std::span<const double> values, const EmConfig& cfg, EmTrace* trace) {
  if (cfg.max_iters < 1 || !(cfg.tol > 0.0) || !(cfg.variance_floor > 0.0)) {
    throw std::invalid_argument("invalid EM configuration");
  }
  if (values.size() < kMinGmmSamples) {
    throw GmmWarmupError("2-GMM needs at least " + std::to_string(kMinGmmSamples) + " values, got " +
                         std::to_string(values.size()));
  }
  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("GMM input must be finite and >= 0");
  }
  std::sort(sorted.begin(), sorted.end());

  GmmFit fit;
  fit.support_lo = sorted.front();
  fit.support_hi = sorted.back();
  if (trace) *trace = EmTrace{};

  if (sorted.front() == sorted.back()) {
    const GaussianComponent c{sorted.front(), std::sqrt(cfg.variance_floor), 0.5};
    fit.clean = c;
    fit.noise = c;
    if (trace) trace->converged = true;
    return fit;
  }

  Params p = init_params(sorted, cfg);
  const std::size_t n = sorted.size();
  std::vector<double> r0(n);
  double prev_ll = -INFINITY;
  bool converged = false;
  int iters = 0;

  for (int it = 0; it < cfg.max_iters; ++it) {
    // E-step with log-sum-exp; the log-likelihood is that of the
    // parameters entering this iteration.
    double ll = 0.0;
    const double lw0 = std::log(p.w[0]);
    const double lw1 = std::log(p.w[1]);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = lw0 + log_normal_pdf(sorted[i], p.mu[0], p.var[0]);
      const double b = lw1 + log_normal_pdf(sorted[i], p.mu[1], p.var[1]);
      const double m = std::max(a, b);
      const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
      r0[i] = std::exp(a - lse);
      ll += lse;
    }
    if (trace) trace->log_likelihood.push_back(ll);
    ++iters;
    if (std::abs(ll - prev_ll) <= cfg.tol) {
      converged = true;
      break;
    }
    prev_ll = ll;

    // M-step.
    double n0 = 0.0;
    double s0 = 0.0;
    double s1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      n0 += r0[i];
      s0 += r0[i] * sorted[i];
      s1 += (1.0 - r0[i]) * sorted[i];
    }
    const double n1 = static_cast<double>(n) - n0;
    // A component that lost all its mass keeps its previous parameters.
    if (n0 <= 1e-12 || n1 <= 1e-12) break;
    p.mu[0] = s0 / n0;
    p.mu[1] = s1 / n1;
    double v0 = 0.0;
    double v1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d0 = sorted[i] - p.mu[0];
      const double d1 = sorted[i] - p.mu[1];
      v0 += r0[i] * d0 * d0;
      v1 += (1.0 - r0[i]) * d1 * d1;
    }
    p.var[0] = std::max(v0 / n0, cfg.variance_floor);
    p.var[1] = std::max(v1 / n1, cfg.variance_floor);
    p.w[0] = n0 / static_cast<double>(n);
    p.w[1] = 1.0 - p.w[0];
  }
  if (trace) {
    trace->iterations = iters;
    trace->converged = converged;
  }

  GaussianComponent a{p.mu[0], std::sqrt(p.var[0]), p.w[0]};
  GaussianComponent b{p.mu[1], std::sqrt(p.var[1]), p.w[1]};
  if (a.mean > b.mean) std::swap(a, b);
  fit.clean = a;
  fit.noise = b;
  return fit;
}

}  // namespace ogc
