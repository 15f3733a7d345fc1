// SPDX-License-Identifier: Apache-2.0

#include "ogc/loss_queue.hpp"

#include <stdexcept>

namespace ogc {

LossQueue::LossQueue(std::size_t capacity) : values_(capacity), flags_(capacity, -1) {
  if (capacity == 0) throw std::invalid_argument("queue capacity must be positive");
}

void LossQueue::push(double h, std::optional<bool> flipped) {
  const std::size_t cap = values_.size();
  std::size_t slot;
  if (size_ < cap) {
    slot = (head_ + size_) % cap;
    ++size_;
  } else {
    slot = head_;
    head_ = (head_ + 1) % cap;
  }
  values_[slot] = h;
  flags_[slot] = flipped ? static_cast<std::int8_t>(*flipped) : std::int8_t{-1};
}

std::vector<double> LossQueue::values() const {
  std::vector<double> out;
  out.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i) out.push_back(values_[(head_ + i) % values_.size()]);
  return out;
}

std::vector<std::int8_t> LossQueue::flags() const {
  std::vector<std::int8_t> out;
  out.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i) out.push_back(flags_[(head_ + i) % flags_.size()]);
  return out;
}

}  // namespace ogc
