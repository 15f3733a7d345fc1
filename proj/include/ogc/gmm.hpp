// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ogc {

struct GaussianComponent {
  double mean = 0.0;  // nats
  double std = 1.0;   // nats
  double weight = 0.5;
};

/// Two ordered Gaussians fitted on cross-entropy values.
/// `clean.mean <= noise.mean` always holds; both are truncated to
/// [support_lo, support_hi] wherever a density is evaluated.
struct GmmFit {
  GaussianComponent clean;
  GaussianComponent noise;
  double support_lo = 0.0;
  double support_hi = 1.0;
};

enum class EmInit { Quantile, KMeans };

struct EmConfig {
  int max_iters = 100;
  double tol = 1e-6;
  double variance_floor = 1e-4;  // nats^2
  EmInit init = EmInit::Quantile;
};

/// Raised when too few values are available to fit a mixture.
class GmmWarmupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMinGmmSamples = 8;

/// Per-iteration log-likelihood trace of the last EM run, for diagnostics.
struct EmTrace {
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
};

/// Fits a two-component mixture by EM.
GmmFit fit_2gmm(std::span<const double> values, const EmConfig& cfg = {}, EmTrace* trace = nullptr);

double normal_pdf(double x, double mean, double std);
double normal_cdf(double x, double mean, double std);

/// Gaussian density renormalized to [lo, hi]; 0 outside.
double truncated_pdf(const GaussianComponent& comp, double lo, double hi, double h);

/// Posterior (clean, noise) probabilities of h under the truncated mixture.
std::pair<double, double> responsibilities(const GmmFit& fit, double h);

}  // namespace ogc
