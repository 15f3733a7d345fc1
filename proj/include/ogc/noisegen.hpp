// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <variant>
#include <vector>

#include "ogc/dataset.hpp"

namespace ogc {

/// Row-stochastic K x K matrix; entry (i, j) is P(given = j | true = i).
class TransitionMatrix {
 public:
  explicit TransitionMatrix(int k);
  TransitionMatrix(int k, std::vector<double> entries);

  int classes() const { return k_; }
  double operator()(int i, int j) const { return entries_[static_cast<std::size_t>(i * k_ + j)]; }
  double& operator()(int i, int j) { return entries_[static_cast<std::size_t>(i * k_ + j)]; }
  std::span<const double> row(int i) const { return {entries_.data() + i * k_, static_cast<std::size_t>(k_)}; }

  /// Throws unless entries are in [0, 1] and rows sum to 1 within 1e-9.
  void validate() const;

 private:
  int k_;
  std::vector<double> entries_;
};

using ClassMap = std::vector<std::pair<int, int>>;

struct SymmetricNoise {
  double eta = 0.0;
};
struct AsymmetricNoise {
  ClassMap class_map;
  double eta = 0.0;
};
/// Stand-in for instance-dependent noise: the flip probability follows a
/// sigmoid of a seeded random projection of the features.
struct InstanceNoise {
  double rate = 0.0;
  int projections = 1;  // random directions summed into the flip logit
  std::uint64_t seed = 0;
};

using NoiseSpec = std::variant<SymmetricNoise, AsymmetricNoise, InstanceNoise>;

struct CorruptedDataset {
  Dataset data;  // labels hold the given (possibly corrupted) labels
  std::vector<int> true_labels;
  std::vector<bool> flip_mask;

  double flip_rate() const;
};

TransitionMatrix build_symmetric(int k, double eta);
TransitionMatrix build_asymmetric(const ClassMap& class_map, double eta, int k);

/// TRUCK->AUTOMOBILE, BIRD->AIRPLANE, DEER->HORSE, CAT<->DOG in CIFAR-10 indices.
ClassMap cifar10_asymmetric_map();
/// i -> i+1 inside consecutive groups of `group` classes, wrapping within each group.
ClassMap circular_map(int k, int group);

/// Corrupts the labels of `clean` according to `spec`; deterministic in seed.
CorruptedDataset corrupt(const Dataset& clean, const NoiseSpec& spec, std::uint64_t seed);

/// Per-sample flip probabilities of the instance-dependent proxy.
std::vector<double> instance_flip_probabilities(const Dataset& clean, const InstanceNoise& spec);

/// CSV with header `index,true_label,given_label,flipped`.
void write_corruption_csv(const CorruptedDataset& data, const std::filesystem::path& path);

}  // namespace ogc
