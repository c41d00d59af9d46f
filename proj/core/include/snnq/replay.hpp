#pragma once

#include <cstdint>
#include <vector>

#include "snnq/rng.hpp"
#include "snnq/tensor.hpp"

namespace snnq {

/// Observation stored in quarter-intensity units (uint8). Both observation
/// modes only emit multiples of 0.25, so the round trip is exact.
class CompactObs {
 public:
  CompactObs() = default;
  static CompactObs from_tensor(const Tensor& obs);
  Tensor to_tensor() const;

  const std::vector<std::uint8_t>& units() const { return units_; }
  const std::vector<int>& shape() const { return shape_; }

 private:
  std::vector<int> shape_;
  std::vector<std::uint8_t> units_;
};

struct Transition {
  CompactObs s;
  int action = 0;
  float reward = 0.0f;
  CompactObs s_next;
  bool done = false;
};

/// Fixed-capacity ring with uniform sampling. Once full, each push evicts
/// the oldest transition.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  const Transition& at(std::size_t i) const;  // 0 is the oldest live entry
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }

  /// `count` independent uniform draws over the live entries
  /// (with replacement).
  std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next slot to write
  std::size_t size_ = 0;
  std::vector<Transition> ring_;
};

}  // namespace snnq
