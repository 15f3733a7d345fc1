// SPDX-License-Identifier: Apache-2.0

#include "ogc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>

namespace ogc {

void Dataset::validate() const {
  if (features.size() != labels.size() * dim) throw std::invalid_argument("feature matrix shape mismatch");
  if (num_classes < 2) throw std::invalid_argument("dataset needs at least two classes");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw std::invalid_argument("label out of range");
  }
}

Dataset make_blobs(const BlobsOptions& opt, std::uint64_t seed) {
  if (opt.num_classes < 2 || opt.dim < 2) throw std::invalid_argument("blobs need K >= 2 and dim >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, opt.spread);
  Dataset d;
  d.dim = opt.dim;
  d.num_classes = opt.num_classes;
  d.features.reserve(opt.n * opt.dim);
  d.labels.reserve(opt.n);
  for (std::size_t i = 0; i < opt.n; ++i) {
    const int y = static_cast<int>(i % static_cast<std::size_t>(opt.num_classes));
    const double angle = 2.0 * std::numbers::pi * y / opt.num_classes;
    for (std::size_t j = 0; j < opt.dim; ++j) {
      double center = 0.0;
      if (j == 0) center = opt.radius * std::cos(angle);
      if (j == 1) center = opt.radius * std::sin(angle);
      d.features.push_back(center + noise(rng));
    }
    d.labels.push_back(y);
  }
  return d;
}

Dataset make_moons(std::size_t n, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, noise);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  Dataset d;
  d.dim = 2;
  d.num_classes = 2;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    const double a = angle(rng);
    double x0 = std::cos(a);
    double x1 = std::sin(a);
    if (y == 1) {
      x0 = 1.0 - x0;
      x1 = 0.5 - x1;
    }
    d.features.push_back(x0 + jitter(rng));
    d.features.push_back(x1 + jitter(rng));
    d.labels.push_back(y);
  }
  return d;
}

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (offset + 4 > bytes.size()) throw IdxParseError("truncated IDX header", bytes.size());
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kIdxImageMagic) throw IdxParseError("bad IDX image magic", 0);
  IdxImages img;
  img.count = read_be32(bytes, 4);
  img.rows = read_be32(bytes, 8);
  img.cols = read_be32(bytes, 12);
  const std::size_t need = img.count * img.rows * img.cols;
  if (bytes.size() - 16 < need) throw IdxParseError("truncated IDX image data", bytes.size());
  img.pixels.resize(need);
  for (std::size_t i = 0; i < need; ++i) img.pixels[i] = bytes[16 + i] / 255.0;
  return img;
}

std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kIdxLabelMagic) throw IdxParseError("bad IDX label magic", 0);
  const std::size_t count = read_be32(bytes, 4);
  if (bytes.size() - 8 < count) throw IdxParseError("truncated IDX label data", bytes.size());
  std::vector<int> labels(count);
  for (std::size_t i = 0; i < count; ++i) labels[i] = bytes[8 + i];
  return labels;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t limit) {
  const auto img_bytes = read_file(images);
  const auto lbl_bytes = read_file(labels);
  IdxImages img = parse_idx_images(img_bytes);
  std::vector<int> lbl = parse_idx_labels(lbl_bytes);
  if (lbl.size() != img.count) {
    throw std::runtime_error("IDX label count " + std::to_string(lbl.size()) + " != image count " +
                             std::to_string(img.count));
  }
  Dataset d;
  d.dim = img.rows * img.cols;
  std::size_t n = img.count;
  if (limit > 0) n = std::min(n, limit);
  d.features.assign(img.pixels.begin(), img.pixels.begin() + static_cast<std::ptrdiff_t>(n * d.dim));
  d.labels.assign(lbl.begin(), lbl.begin() + static_cast<std::ptrdiff_t>(n));
  d.num_classes = std::max(2, *std::max_element(lbl.begin(), lbl.end()) + 1);
  return d;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, std::size_t n_first) {
  if (n_first > data.size()) throw std::invalid_argument("split point beyond dataset size");
  Dataset a;
  Dataset b;
  a.dim = b.dim = data.dim;
  a.num_classes = b.num_classes = data.num_classes;
  const auto cut = static_cast<std::ptrdiff_t>(n_first * data.dim);
  a.features.assign(data.features.begin(), data.features.begin() + cut);
  b.features.assign(data.features.begin() + cut, data.features.end());
  a.labels.assign(data.labels.begin(), data.labels.begin() + static_cast<std::ptrdiff_t>(n_first));
  b.labels.assign(data.labels.begin() + static_cast<std::ptrdiff_t>(n_first), data.labels.end());
  return {a, b};
}

}  // namespace ogc
