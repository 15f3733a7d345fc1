// SPDX-License-Identifier: Apache-2.0

#include "ogc/noisegen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <stdexcept>

namespace ogc {

TransitionMatrix::TransitionMatrix(int k) : k_(k), entries_(static_cast<std::size_t>(k * k), 0.0) {
  if (k < 2) throw std::invalid_argument("transition matrix needs K >= 2");
  for (int i = 0; i < k; ++i) (*this)(i, i) = 1.0;
}

TransitionMatrix::TransitionMatrix(int k, std::vector<double> entries) : k_(k), entries_(std::move(entries)) {
  if (k < 2 || entries_.size() != static_cast<std::size_t>(k * k)) {
    throw std::invalid_argument("transition matrix shape mismatch");
  }
  validate();
}

void TransitionMatrix::validate() const {
  for (int i = 0; i < k_; ++i) {
    double sum = 0.0;
    for (int j = 0; j < k_; ++j) {
      const double v = (*this)(i, j);
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("transition entry outside [0, 1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("transition row does not sum to 1");
  }
}

double CorruptedDataset::flip_rate() const {
  if (flip_mask.empty()) return 0.0;
  return static_cast<double>(std::count(flip_mask.begin(), flip_mask.end(), true)) /
         static_cast<double>(flip_mask.size());
}

TransitionMatrix build_symmetric(int k, double eta) {
  if (!(eta >= 0.0 && eta < 1.0)) throw std::invalid_argument("symmetric noise rate must lie in [0, 1)");
  if (k < 2) throw std::invalid_argument("transition matrix needs K >= 2");
  if (eta >= 1.0 - 1.0 / k) {
    std::cerr << "warning: symmetric noise rate " << eta << " >= 1 - 1/K; robustness bounds do not apply\n";
  }
  TransitionMatrix m(k);
  const double off = eta / (k - 1);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) m(i, j) = i == j ? 1.0 - eta : off;
  }
  return m;
}

TransitionMatrix build_asymmetric(const ClassMap& class_map, double eta, int k) {
  if (!(eta >= 0.0 && eta < 1.0)) throw std::invalid_argument("asymmetric noise rate must lie in [0, 1)");
  TransitionMatrix m(k);
  std::set<int> seen;
  for (auto [from, to] : class_map) {
    if (from < 0 || from >= k || to < 0 || to >= k) throw std::invalid_argument("class map index out of range");
    if (from == to) throw std::invalid_argument("class map contains a self-map");
    if (!seen.insert(from).second) throw std::invalid_argument("class map source appears twice");
    m(from, from) = 1.0 - eta;
    m(from, to) = eta;
  }
  return m;
}

ClassMap cifar10_asymmetric_map() {
  // airplane 0, automobile 1, bird 2, cat 3, deer 4, dog 5, frog 6, horse 7, ship 8, truck 9
  return {{9, 1}, {2, 0}, {4, 7}, {3, 5}, {5, 3}};
}

ClassMap circular_map(int k, int group) {
  if (group < 2 || k % group != 0) throw std::invalid_argument("group size must divide K and be >= 2");
  ClassMap map;
  for (int base = 0; base < k; base += group) {
    for (int i = 0; i < group; ++i) map.emplace_back(base + i, base + (i + 1) % group);
  }
  return map;
}

namespace {

int sample_row(std::span<const double> row, double u) {
  double acc = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    acc += row[j];
    if (u < acc) return static_cast<int>(j);
  }
  // u landed in the rounding slack at the end of the row
  for (std::size_t j = row.size(); j-- > 0;) {
    if (row[j] > 0.0) return static_cast<int>(j);
  }
  return 0;
}

CorruptedDataset corrupt_with_matrix(const Dataset& clean, const TransitionMatrix& m, std::uint64_t seed) {
  if (m.classes() != clean.num_classes) throw std::invalid_argument("transition matrix size != number of classes");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  CorruptedDataset out;
  out.data = clean;
  out.true_labels = clean.labels;
  out.flip_mask.resize(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const int y = clean.labels[i];
    const int given = sample_row(m.row(y), unif(rng));
    out.data.labels[i] = given;
    out.flip_mask[i] = given != y;
  }
  return out;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::vector<double> instance_flip_probabilities(const Dataset& clean, const InstanceNoise& spec) {
  if (!(spec.rate >= 0.0 && spec.rate < 1.0)) throw std::invalid_argument("instance noise rate must lie in [0, 1)");
  if (spec.projections < 1) throw std::invalid_argument("instance noise needs at least one projection");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> w(clean.dim, 0.0);
  for (int p = 0; p < spec.projections; ++p) {
    for (double& v : w) v += gauss(rng);
  }
  const std::size_t n = clean.size();
  std::vector<double> z(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = clean.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < clean.dim; ++j) s += w[j] * x[j];
    z[i] = s;
    mean += s;
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double s : z) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  std::vector<double> base(n);
  for (std::size_t i = 0; i < n; ++i) base[i] = sigmoid(sd > 0.0 ? (z[i] - mean) / sd : 0.0);

  // Scalar multiplier c with mean(min(1, c * base)) == rate; the mean is
  // nondecreasing in c.
  auto mean_rate = [&](double c) {
    double acc = 0.0;
    for (double b : base) acc += std::min(1.0, c * b);
    return acc / static_cast<double>(n);
  };
  double lo = 0.0;
  double hi = 1.0;
  while (mean_rate(hi) < spec.rate && hi < 1e12) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_rate(mid) < spec.rate) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  for (double& b : base) b = std::min(1.0, hi * b);
  return base;
}

CorruptedDataset corrupt(const Dataset& clean, const NoiseSpec& spec, std::uint64_t seed) {
  if (clean.empty()) throw std::invalid_argument("cannot corrupt an empty dataset");
  clean.validate();
  if (const auto* s = std::get_if<SymmetricNoise>(&spec)) {
    return corrupt_with_matrix(clean, build_symmetric(clean.num_classes, s->eta), seed);
  }
  if (const auto* a = std::get_if<AsymmetricNoise>(&spec)) {
    return corrupt_with_matrix(clean, build_asymmetric(a->class_map, a->eta, clean.num_classes), seed);
  }

  const auto& inst = std::get<InstanceNoise>(spec);
  const std::vector<double> flip_p = instance_flip_probabilities(clean, inst);
  const int k = clean.num_classes;
  // Second projection picks the wrong class: argmax over j != y of (W x)_j.
  std::mt19937_64 proj_rng(inst.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> wc(static_cast<std::size_t>(k) * clean.dim);
  for (double& v : wc) v = gauss(proj_rng);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  CorruptedDataset out;
  out.data = clean;
  out.true_labels = clean.labels;
  out.flip_mask.resize(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const int y = clean.labels[i];
    if (unif(rng) >= flip_p[i]) continue;
    const auto x = clean.row(i);
    int best = -1;
    double best_score = -INFINITY;
    for (int j = 0; j < k; ++j) {
      if (j == y) continue;
      double s = 0.0;
      for (std::size_t d = 0; d < clean.dim; ++d) s += wc[static_cast<std::size_t>(j) * clean.dim + d] * x[d];
      if (s > best_score) {
        best_score = s;
        best = j;
      }
    }
    out.data.labels[i] = best;
    out.flip_mask[i] = true;
  }
  return out;
}

void write_corruption_csv(const CorruptedDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "index,true_label,given_label,flipped\n";
  for (std::size_t i = 0; i < data.true_labels.size(); ++i) {
    out << i << ',' << data.true_labels[i] << ',' << data.data.labels[i] << ',' << (data.flip_mask[i] ? 1 : 0)
        << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace ogc
