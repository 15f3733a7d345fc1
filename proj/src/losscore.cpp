// SPDX-License-Identifier: Apache-2.0

#include "ogc/losscore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ogc {

namespace {

void require_prob(double p_y, bool allow_zero) {
  if (!(p_y <= 1.0) || !(allow_zero ? p_y >= 0.0 : p_y > 0.0)) {
    throw std::domain_error("probability outside (0, 1]: " + std::to_string(p_y));
  }
}

bool is_mae_like(const BaseLoss& base) {
  return base.kind == LossKind::MAE || (base.kind == LossKind::GCE && base.q == 1.0);
}

bool is_ce_like(const BaseLoss& base) {
  return base.kind == LossKind::CE || (base.kind == LossKind::FL && base.gamma == 0.0);
}

double focal_grad_norm(double gamma, double p) {
  if (p >= 1.0) return 0.0;
  const double u = 1.0 - p;
  const double a = std::pow(u, gamma) / p;
  const double b = gamma * std::pow(u, gamma - 1.0) * -std::log(p);
  return a + b;
}

// Bisection for grad_norm(base, p) == tau on [lo, hi] where grad_norm is
// decreasing, g(lo) >= tau >= g(hi).
double bisect_clip_point(const BaseLoss& base, double tau, double lo, double hi) {
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (grad_norm(base, mid) >= tau) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double glo = grad_norm(base, lo);
  const double ghi = grad_norm(base, hi);
  return std::abs(glo - tau) <= std::abs(ghi - tau) ? lo : hi;
}

// First local minimum of the focal gradient norm on a log-spaced scan.
double focal_monotone_limit(const BaseLoss& base) {
  constexpr int kScan = 4096;
  const double log_lo = std::log(kProbFloor);
  double prev_p = kProbFloor;
  double prev_g = grad_norm(base, prev_p);
  for (int i = 1; i <= kScan; ++i) {
    const double p = std::exp(log_lo * (1.0 - static_cast<double>(i) / kScan));
    const double g = grad_norm(base, p);
    if (g >= prev_g) return prev_p;
    prev_p = p;
    prev_g = g;
  }
  return 1.0;
}

}  // namespace

BaseLoss BaseLoss::focal(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("focal gamma must be >= 0");
  return {LossKind::FL, gamma, 0.7};
}

BaseLoss BaseLoss::gce(double q) {
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("GCE q must lie in (0, 1]");
  return {LossKind::GCE, 0.0, q};
}

std::string BaseLoss::name() const {
  switch (kind) {
    case LossKind::CE: return "ce";
    case LossKind::FL: return "fl";
    case LossKind::GCE: return "gce";
    case LossKind::MAE: return "mae";
  }
  return "?";
}

BaseLoss parse_base_loss(std::string_view name, double gamma, double q) {
  if (name == "ce") return BaseLoss::ce();
  if (name == "fl") return BaseLoss::focal(gamma);
  if (name == "gce") return BaseLoss::gce(q);
  if (name == "mae") return BaseLoss::mae();
  throw std::invalid_argument("unknown loss '" + std::string(name) + "'");
}

ProbVector::ProbVector(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("empty probability vector");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability entry outside [0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw std::invalid_argument("probabilities do not sum to 1");
}

double loss_value(const BaseLoss& base, double p_y) {
  require_prob(p_y, false);
  const double p = std::max(p_y, kProbFloor);
  switch (base.kind) {
    case LossKind::CE: return -std::log(p);
    case LossKind::FL: return -std::pow(1.0 - p, base.gamma) * std::log(p);
    case LossKind::GCE: return (1.0 - std::pow(p, base.q)) / base.q;
    case LossKind::MAE: return 1.0 - p;
  }
  return 0.0;
}

double grad_norm(const BaseLoss& base, double p_y) {
  require_prob(p_y, false);
  const double p = std::max(p_y, kProbFloor);
  switch (base.kind) {
    case LossKind::CE: return 1.0 / p;
    case LossKind::FL: return base.gamma == 0.0 ? 1.0 / p : focal_grad_norm(base.gamma, p);
    case LossKind::GCE: return std::pow(p, base.q - 1.0);
    case LossKind::MAE: return 1.0;
  }
  return 0.0;
}

std::vector<double> clip_vector(std::span<const double> w, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("clip threshold must be positive");
  const double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
  std::vector<double> out(w.begin(), w.end());
  if (norm >= tau && norm > 0.0) {
    const double scale = tau / norm;
    for (double& v : out) v *= scale;
  }
  return out;
}

double solve_clip_point(const BaseLoss& base, double tau) {
  if (!(tau >= 1.0)) throw std::invalid_argument("clip threshold must be >= 1");
  if (is_mae_like(base)) return tau <= 1.0 ? 1.0 : 0.0;
  if (is_ce_like(base)) return 1.0 / tau;
  if (base.kind == LossKind::GCE) return std::pow(tau, 1.0 / (base.q - 1.0));

  // Focal loss: the gradient norm is only decreasing up to its first
  // stationary point, so bracket the root there.
  const double upper = focal_monotone_limit(base);
  if (grad_norm(base, kProbFloor) < tau) return 0.0;
  if (grad_norm(base, upper) >= tau) return upper;
  return bisect_clip_point(base, tau, kProbFloor, upper);
}

HuberizedLoss HuberizedLoss::make(const BaseLoss& base, double tau, double tau_max) {
  if (std::isnan(tau)) throw std::invalid_argument("clip threshold is NaN");
  const double t = std::clamp(tau, 1.0, std::max(1.0, tau_max));
  return {base, t, solve_clip_point(base, t)};
}

double huberized_value(const HuberizedLoss& hub, double p_y) {
  require_prob(p_y, hub.clip_point > 0.0);
  if (!hub.clips(p_y)) return loss_value(hub.base, p_y);
  if (is_ce_like(hub.base)) return 1.0 - hub.tau * p_y + std::log(hub.tau);
  const double anchor = hub.clip_point;
  return loss_value(hub.base, anchor) + hub.tau * (anchor - p_y);
}

double huberized_slope(const HuberizedLoss& hub, double p_y) {
  require_prob(p_y, hub.clip_point > 0.0);
  if (hub.clips(p_y)) return -hub.tau;
  return -grad_norm(hub.base, p_y);
}

std::vector<double> huberized_grad_probs(const HuberizedLoss& hub, const ProbVector& p,
                                         std::size_t y) {
  if (y >= p.size()) throw std::out_of_range("label index out of range");
  std::vector<double> g(p.size(), 0.0);
  g[y] = huberized_slope(hub, std::max(p[y], kProbFloor));
  return g;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  const double mx = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

double ce_from_logits(std::span<const double> logits, std::size_t y) {
  if (y >= logits.size()) throw std::out_of_range("label index out of range");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  return std::log(sum) + mx - logits[y];
}

double huberized_grad_logits_into(const HuberizedLoss& hub, std::span<const double> logits,
                                  std::size_t y, std::span<double> out) {
  const std::size_t k = logits.size();
  if (y >= k) throw std::out_of_range("label index out of range");
  if (out.size() != k) throw std::invalid_argument("output span has wrong size");
  for (double z : logits) {
    if (!std::isfinite(z)) throw std::domain_error("non-finite logit");
  }
  const std::vector<double> p = softmax(logits);
  const double p_y = p[y];
  const double p_eval = std::max(p_y, kProbFloor);

  // dL/dz_k = (dL/dp_y) * p_y * (onehot_k - p_k); fold p_y into the slope
  // where a closed form avoids cancellation.
  double scaled;
  if (hub.clips(p_eval)) {
    scaled = -hub.tau * p_y;
  } else if (is_ce_like(hub.base)) {
    scaled = -1.0;
  } else if (hub.base.kind == LossKind::GCE) {
    scaled = -std::pow(p_eval, hub.base.q);
  } else {
    scaled = -grad_norm(hub.base, p_eval) * p_y;
  }
  for (std::size_t j = 0; j < k; ++j) {
    out[j] = scaled * ((j == y ? 1.0 : 0.0) - p[j]);
  }
  return p_y;
}

std::vector<double> huberized_grad_logits(const HuberizedLoss& hub, std::span<const double> logits,
                                          std::size_t y) {
  std::vector<double> out(logits.size());
  huberized_grad_logits_into(hub, logits, y, out);
  return out;
}

double ce_from_probs(const ProbVector& p, std::size_t y) {
  if (y >= p.size()) throw std::out_of_range("label index out of range");
  return -std::log(std::max(p[y], kProbFloor));
}

double phi_h_to_loss(const BaseLoss& base, double H) {
  if (!(H >= 0.0)) throw std::domain_error("cross-entropy value must be >= 0");
  return loss_value(base, std::max(std::exp(-H), kProbFloor));
}

}  // namespace ogc
