// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ogc/noisegen.hpp"

using namespace ogc;
using doctest::Approx;

namespace {
Dataset balanced(std::size_t n, int k) {
  BlobsOptions o;
  o.n = n;
  o.num_classes = k;
  return make_blobs(o, 3);
}
}  // namespace

TEST_CASE("symmetric matrices") {
  const auto id = build_symmetric(2, 0.0);
  CHECK(id(0, 0) == 1.0);
  CHECK(id(0, 1) == 0.0);
  const auto m = build_symmetric(10, 0.5);
  CHECK(m(3, 3) == Approx(0.5));
  CHECK(m(3, 4) == Approx(0.0556).epsilon(1e-3));
  CHECK(m(3, 4) == Approx(0.5 / 9));
  CHECK_NOTHROW(m.validate());
  CHECK_THROWS(build_symmetric(3, 1.0));
  CHECK_THROWS(build_symmetric(1, 0.1));
}

TEST_CASE("asymmetric matrices") {
  const auto m = build_asymmetric(cifar10_asymmetric_map(), 0.4, 10);
  int moved = 0;
  for (int i = 0; i < 10; ++i) moved += m(i, i) < 1.0;
  CHECK(moved == 5);
  CHECK(m(9, 1) == Approx(0.4));
  CHECK(m(2, 0) == Approx(0.4));
  CHECK(m(4, 7) == Approx(0.4));
  CHECK(m(3, 5) == Approx(0.4));
  CHECK(m(5, 3) == Approx(0.4));
  CHECK(m(0, 0) == 1.0);
  const auto c = build_asymmetric(circular_map(5, 5), 0.4, 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(c(i, i) == Approx(0.6));
    CHECK(c(i, (i + 1) % 5) == Approx(0.4));
  }
  const auto z = build_asymmetric(circular_map(4, 2), 0.0, 4);
  for (int i = 0; i < 4; ++i) CHECK(z(i, i) == 1.0);
  CHECK_THROWS(build_asymmetric({{1, 1}}, 0.2, 3));
  CHECK_THROWS(build_asymmetric({{0, 1}, {0, 2}}, 0.2, 3));
  CHECK_THROWS(build_asymmetric({{0, 5}}, 0.2, 3));
  CHECK_THROWS(TransitionMatrix(2, {0.5, 0.4, 0.0, 1.0}));
}

TEST_CASE("corruption rates") {
  const Dataset d = balanced(100000, 2);
  const auto none = corrupt(d, SymmetricNoise{0.0}, 5);
  CHECK(std::none_of(none.flip_mask.begin(), none.flip_mask.end(), [](bool b) { return b; }));
  const auto half = corrupt(d, SymmetricNoise{0.5}, 5);
  CHECK(std::abs(half.flip_rate() - 0.5) <= 3.0 * std::sqrt(0.25 / 1e5));
  for (std::size_t i = 0; i < d.size(); ++i) {
    REQUIRE(half.flip_mask[i] == (half.data.labels[i] != half.true_labels[i]));
    REQUIRE(half.true_labels[i] == d.labels[i]);
  }
  const auto again = corrupt(d, SymmetricNoise{0.5}, 5);
  CHECK(again.data.labels == half.data.labels);
}

TEST_CASE("symmetric flips spread uniformly over other classes") {
  const int k = 5;
  const Dataset d = balanced(50000, k);
  const auto c = corrupt(d, SymmetricNoise{0.4}, 8);
  // chi-square over the 4 wrong targets of class 0, 3 dof: 99.9% point 16.27
  std::vector<double> counts(k, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (c.true_labels[i] == 0 && c.flip_mask[i]) {
      counts[c.data.labels[i]] += 1.0;
      total += 1.0;
    }
  }
  double chi2 = 0.0;
  for (int j = 1; j < k; ++j) chi2 += std::pow(counts[j] - total / 4, 2) / (total / 4);
  CHECK(chi2 < 16.27);
}

TEST_CASE("instance-dependent proxy") {
  const Dataset d = balanced(20000, 3);
  const InstanceNoise spec{0.3, 2, 99};
  const auto probs = instance_flip_probabilities(d, spec);
  double mean = 0.0;
  for (double p : probs) mean += p;
  mean /= static_cast<double>(probs.size());
  CHECK(mean == Approx(0.3).epsilon(1e-3));
  CHECK(*std::max_element(probs.begin(), probs.end()) > *std::min_element(probs.begin(), probs.end()));
  const auto c = corrupt(d, spec, 4);
  CHECK(std::abs(c.flip_rate() - 0.3) <= 4.0 * std::sqrt(0.21 / 20000));
  CHECK_THROWS(instance_flip_probabilities(d, InstanceNoise{1.0, 1, 1}));
}

TEST_CASE("corruption csv") {
  const auto c = corrupt(balanced(10, 2), SymmetricNoise{0.5}, 1);
  const auto path = std::filesystem::temp_directory_path() / "ogc_corrupt_test.csv";
  write_corruption_csv(c, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "index,true_label,given_label,flipped");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 10);
  std::filesystem::remove(path);
}
