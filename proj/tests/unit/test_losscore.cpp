// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "ogc/losscore.hpp"

using namespace ogc;
using doctest::Approx;

TEST_CASE("base loss values") {
  CHECK(loss_value(BaseLoss::ce(), 1.0) == Approx(0.0));
  CHECK(loss_value(BaseLoss::ce(), 0.5) == Approx(0.693147).epsilon(1e-6));
  CHECK(loss_value(BaseLoss::gce(0.7), 1.0) == Approx(0.0));
  CHECK(loss_value(BaseLoss::mae(), 0.25) == Approx(0.75));
  CHECK_THROWS(loss_value(BaseLoss::ce(), 0.0));
  CHECK_THROWS(loss_value(BaseLoss::ce(), 1.5));
  CHECK_THROWS(loss_value(BaseLoss::ce(), NAN));
}

TEST_CASE("gradient norms") {
  CHECK(grad_norm(BaseLoss::ce(), 0.5) == Approx(2.0));
  CHECK(grad_norm(BaseLoss::mae(), 0.3) == Approx(1.0));
  CHECK(grad_norm(BaseLoss::gce(0.7), 0.1) == Approx(std::pow(0.1, -0.3)).epsilon(1e-12));
  CHECK(grad_norm(BaseLoss::gce(0.7), 0.1) == Approx(1.9953).epsilon(1e-4));
  // FL(gamma=0) reduces to CE.
  CHECK(grad_norm(BaseLoss::focal(0.0), 0.2) == Approx(5.0));
}

TEST_CASE("base loss parameters are validated") {
  CHECK_THROWS(BaseLoss::gce(0.0));
  CHECK_THROWS(BaseLoss::gce(1.5));
  CHECK_THROWS(BaseLoss::focal(-1.0));
  CHECK_THROWS(parse_base_loss("hinge", 0.0, 0.7));
  CHECK(parse_base_loss("gce", 0.0, 0.5).q == 0.5);
}

TEST_CASE("clip_vector") {
  const std::vector<double> w{3.0, 4.0};
  CHECK(clip_vector(w, 10.0) == w);
  CHECK(clip_vector(w, 5.0) == w);
  const auto c = clip_vector(w, 1.0);
  CHECK(c[0] == Approx(0.6));
  CHECK(c[1] == Approx(0.8));
  CHECK_THROWS(clip_vector(w, 0.0));
}

TEST_CASE("clip point") {
  CHECK(solve_clip_point(BaseLoss::ce(), 4.0) == Approx(0.25));
  CHECK(solve_clip_point(BaseLoss::ce(), 1.0) == Approx(1.0));
  CHECK(solve_clip_point(BaseLoss::gce(0.7), 2.0) == Approx(std::pow(2.0, -10.0 / 3.0)).epsilon(1e-12));
  CHECK(solve_clip_point(BaseLoss::gce(0.7), 2.0) == Approx(0.099213).epsilon(1e-5));
  CHECK(solve_clip_point(BaseLoss::mae(), 2.0) == 0.0);
  for (double gamma : {0.5, 1.0, 2.0}) {
    for (double tau : {1.5, 3.0, 50.0}) {
      const double p = solve_clip_point(BaseLoss::focal(gamma), tau);
      REQUIRE(p > 0.0);
      CHECK(grad_norm(BaseLoss::focal(gamma), p) == Approx(tau).epsilon(1e-8));
    }
  }
}

TEST_CASE("huberized CE") {
  const auto hub = HuberizedLoss::make(BaseLoss::ce(), 4.0);
  CHECK(huberized_value(hub, 0.5) == Approx(0.693147).epsilon(1e-6));
  CHECK(huberized_value(hub, 0.1) == Approx(1.0 - 0.4 + std::log(4.0)).epsilon(1e-12));
  CHECK(huberized_value(hub, 0.1) == Approx(1.986294).epsilon(1e-6));
  CHECK(huberized_value(hub, 0.0) == Approx(1.0 + std::log(4.0)));
  const auto mae_like = HuberizedLoss::make(BaseLoss::ce(), 1.0);
  CHECK(huberized_value(mae_like, 0.3) == Approx(0.7).epsilon(1e-12));
  // tau is clamped into [1, tau_max]
  CHECK(HuberizedLoss::make(BaseLoss::ce(), 0.2).tau == 1.0);
  CHECK(HuberizedLoss::make(BaseLoss::ce(), 1e9).tau == kTauCap);
  CHECK(HuberizedLoss::make(BaseLoss::ce(), 50.0, 10.0).tau == 10.0);
  CHECK_THROWS(HuberizedLoss::make(BaseLoss::ce(), NAN));
}

TEST_CASE("huberized probability gradient") {
  const auto hub = HuberizedLoss::make(BaseLoss::ce(), 4.0);
  CHECK(huberized_grad_probs(hub, ProbVector({0.5, 0.5}), 0)[0] == Approx(-2.0));
  CHECK(huberized_grad_probs(hub, ProbVector({0.1, 0.9}), 0)[0] == Approx(-4.0));
  CHECK(huberized_grad_probs(hub, ProbVector({0.1, 0.9}), 0)[1] == 0.0);
  const auto mae = HuberizedLoss::make(BaseLoss::mae(), 2.0);
  for (double p : {0.01, 0.4, 0.99}) CHECK(huberized_grad_probs(mae, ProbVector({p, 1 - p}), 0)[0] == Approx(-1.0));
}

TEST_CASE("huberized logit gradient examples") {
  const std::vector<double> z{0.0, 0.0};
  const auto g = huberized_grad_logits(HuberizedLoss::make(BaseLoss::ce(), 1e9), z, 0);
  CHECK(g[0] == Approx(-0.5));
  CHECK(g[1] == Approx(0.5));
  const auto c = huberized_grad_logits(HuberizedLoss::make(BaseLoss::ce(), 1.0), z, 0);
  CHECK(c[0] == Approx(-0.25));
  CHECK(c[1] == Approx(0.25));
}

TEST_CASE("property: bounds and gradient norm") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    const double p = u(rng);
    const double tau = std::exp(u(rng) * std::log(1e4));
    const auto hub = HuberizedLoss::make(BaseLoss::ce(), tau);
    const double v = huberized_value(hub, p);
    REQUIRE(v >= 1.0 - p - 1e-9);
    REQUIRE(v <= (1.0 - p) * (1.0 + std::log(tau)) + 1e-9);
    REQUIRE(std::abs(huberized_slope(hub, p)) <= tau * (1 + 1e-12));
  }
}

TEST_CASE("softmax and cross-entropy") {
  const std::vector<double> z{1000.0, 0.0, -1000.0};
  const auto p = softmax(z);
  CHECK(p[0] == Approx(1.0));
  CHECK(ce_from_logits(z, 1) == Approx(1000.0));
  CHECK(ce_from_logits(std::vector<double>{0.0, 0.0}, 0) == Approx(std::log(2.0)));
  CHECK(ce_from_probs(ProbVector({0.25, 0.75}), 0) == Approx(std::log(4.0)));
  CHECK_THROWS(ProbVector({0.5, 0.6}));
  CHECK_THROWS(ProbVector({-0.1, 1.1}));
}

TEST_CASE("cross-entropy to loss mapping") {
  for (double h : {0.0, 0.3, 2.0, 7.5}) CHECK(phi_h_to_loss(BaseLoss::ce(), h) == Approx(h));
  CHECK(phi_h_to_loss(BaseLoss::mae(), 0.0) == Approx(0.0));
  // p = 0.1: (1 - 0.1^0.7) / 0.7 = 1.143534
  CHECK(phi_h_to_loss(BaseLoss::gce(0.7), 2.302585) == Approx(1.143534).epsilon(1e-6));
  CHECK(phi_h_to_loss(BaseLoss::gce(0.7), std::log(10.0)) == Approx((1 - std::pow(0.1, 0.7)) / 0.7));
}
