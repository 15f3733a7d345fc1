// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "ogc/losscore.hpp"
#include "ogc/model.hpp"

using namespace ogc;
using doctest::Approx;

TEST_CASE("forward") {
  const auto z = MlpModel::zeros({3, 4, 2});
  const auto out = forward(z, std::vector<double>{1.0, -2.0, 0.5});
  CHECK(out == std::vector<double>{0.0, 0.0});

  auto lin = MlpModel::zeros({2, 2});
  lin.layers()[0].weight = {1.0, 2.0, 3.0, 4.0};
  lin.layers()[0].bias = {0.5, -0.5};
  const auto y = forward(lin, std::vector<double>{1.0, 0.0});
  CHECK(y[0] == 1.5);
  CHECK(y[1] == 2.5);

  const auto m = MlpModel::he_uniform({4, 16, 3}, 2);
  const auto p = softmax(forward(m, std::vector<double>{0.1, 0.2, -0.3, 1.0}));
  CHECK(p[0] + p[1] + p[2] == Approx(1.0));
  CHECK_THROWS(forward(m, std::vector<double>{0.1, NAN, 0.0, 0.0}));
  CHECK_THROWS(forward(m, std::vector<double>{0.1}));
}

TEST_CASE("backward closed forms") {
  const auto m = MlpModel::he_uniform({3, 5, 2}, 1);
  const std::vector<double> x{0.3, -0.1, 0.8};
  const auto g0 = backward(m, x, std::vector<double>{0.0, 0.0});
  CHECK(global_norm(g0) == 0.0);

  auto lin = MlpModel::he_uniform({3, 2}, 4);
  const std::vector<double> gl{0.7, -1.2};
  const auto g = backward(lin, x, gl);
  for (std::size_t o = 0; o < 2; ++o) {
    CHECK(g[0].bias[o] == Approx(gl[o]));
    for (std::size_t i = 0; i < 3; ++i) CHECK(g[0].weight[o * 3 + i] == Approx(gl[o] * x[i]));
  }
}

TEST_CASE("backward vs finite differences") {
  MlpModel m = MlpModel::he_uniform({3, 6, 4}, 7);
  const std::vector<double> x{0.4, -0.9, 0.25};
  const std::size_t y = 2;
  const auto hub = HuberizedLoss::make(BaseLoss::ce(), 3.0);
  auto loss = [&](const MlpModel& mm) { return huberized_value(hub, softmax(forward(mm, x))[y]); };
  const auto gl = huberized_grad_logits(hub, forward(m, x), y);
  const auto g = backward(m, x, gl);
  double worst = 0.0;
  const double h = 1e-6;
  for (std::size_t l = 0; l < m.num_layers(); ++l) {
    for (std::size_t i = 0; i < m.layers()[l].weight.size(); ++i) {
      MlpModel a = m, b = m;
      a.layers()[l].weight[i] += h;
      b.layers()[l].weight[i] -= h;
      const double fd = (loss(a) - loss(b)) / (2 * h);
      worst = std::max(worst, std::abs(fd - g[l].weight[i]) / std::max(std::abs(fd), 1e-3));
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("sgd step") {
  auto m = MlpModel::he_uniform({2, 2}, 3);
  const auto before = m.layers()[0].weight;
  auto grads = m.zero_grads();
  grads[0].weight = {1.0, 2.0, 3.0, 4.0};
  auto opt = OptimizerState::for_model(m, 0.1, 0.0, 0.0, 100.0);
  sgd_step(m, opt, grads);
  for (std::size_t i = 0; i < 4; ++i) CHECK(m.layers()[0].weight[i] == Approx(before[i] - 0.1 * grads[0].weight[i]));

  auto m2 = MlpModel::zeros({2, 2});
  auto big = m2.zero_grads();
  big[0].weight = {30.0, 40.0, 0.0, 0.0};  // norm 50
  auto opt2 = OptimizerState::for_model(m2, 1.0, 0.0, 0.0, 5.0);
  const auto rep = sgd_step(m2, opt2, big);
  CHECK(rep.grad_norm == Approx(50.0));
  CHECK(rep.clipped);
  CHECK(m2.layers()[0].weight[0] == Approx(-3.0));
  CHECK(m2.layers()[0].weight[1] == Approx(-4.0));

  auto bad = m2.zero_grads();
  bad[0].weight[0] = NAN;
  CHECK_THROWS_AS(sgd_step(m2, opt2, bad), NonFiniteGradientError);
}

TEST_CASE("determinism and checkpoints") {
  const auto a = MlpModel::he_uniform({2, 8, 3}, 11);
  const auto b = MlpModel::he_uniform({2, 8, 3}, 11);
  for (std::size_t l = 0; l < a.num_layers(); ++l) CHECK(a.layers()[l].weight == b.layers()[l].weight);
  const auto path = std::filesystem::temp_directory_path() / "ogc_ckpt_test.bin";
  save_checkpoint(a, path);
  CHECK(std::filesystem::file_size(path) == 8 + 3 * 8 + a.num_params() * 8);
  const auto c = load_checkpoint(path);
  CHECK(c.dims() == a.dims());
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    CHECK(c.layers()[l].weight == a.layers()[l].weight);
    CHECK(c.layers()[l].bias == a.layers()[l].bias);
  }
  std::filesystem::resize_file(path, 20);
  CHECK_THROWS(load_checkpoint(path));
  std::filesystem::remove(path);
}

TEST_CASE("learning rate schedule") {
  LrSchedule s{0.1, 0.1, {50, 100}};
  CHECK(s.at(0) == Approx(0.1));
  CHECK(s.at(49) == Approx(0.1));
  CHECK(s.at(50) == Approx(0.01));
  CHECK(s.at(120) == Approx(0.001));
  LrSchedule bad{0.1, 0.1, {100, 50}};
  CHECK_THROWS(bad.validate());
}
