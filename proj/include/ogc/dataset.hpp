// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ogc {

/// Row-major feature matrix with one class label per row.
struct Dataset {
  std::size_t dim = 0;
  int num_classes = 0;
  std::vector<double> features;  // size() * dim
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * dim, dim}; }

  /// Throws unless shapes agree and every label lies in [0, num_classes).
  void validate() const;
};

struct BlobsOptions {
  std::size_t n = 1000;
  int num_classes = 2;
  std::size_t dim = 2;
  double radius = 1.0;  // class centers sit on a circle (first two axes) of this radius
  double spread = 0.5;  // per-axis standard deviation around a center
};

/// Isotropic Gaussian blobs; labels are balanced (i mod K).
Dataset make_blobs(const BlobsOptions& opt, std::uint64_t seed);

/// Two interleaved half circles with Gaussian jitter; binary labels.
Dataset make_moons(std::size_t n, double noise, std::uint64_t seed);

/// Error raised by the IDX reader; `offset` is the byte position of the problem.
class IdxParseError : public std::runtime_error {
 public:
  IdxParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> pixels;  // count * rows * cols, scaled to [0, 1]
};

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes);

/// Reads an IDX image file and its label file into a dataset.
/// `limit` > 0 keeps only the first `limit` samples.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t limit = 0);

/// Splits off the first `n_first` rows.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, std::size_t n_first);

}  // namespace ogc
