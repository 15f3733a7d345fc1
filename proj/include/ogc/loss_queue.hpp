// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace ogc {

/// Fixed-capacity FIFO of per-sample cross-entropy values.
///
/// Each entry may carry the sample's flip flag when it is known (synthetic
/// runs); the flag is diagnostic only and never feeds the mixture fit.
class LossQueue {
 public:
  explicit LossQueue(std::size_t capacity);

  void push(double h, std::optional<bool> flipped = std::nullopt);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return values_.size(); }
  bool full() const { return size_ == values_.size(); }

  /// Entries oldest first.
  std::vector<double> values() const;
  /// Flip flags oldest first: 1 flipped, 0 clean, -1 unknown.
  std::vector<std::int8_t> flags() const;

 private:
  std::vector<double> values_;
  std::vector<std::int8_t> flags_;
  std::size_t head_ = 0;  // index of the oldest entry
  std::size_t size_ = 0;
};

}  // namespace ogc
