#include "snnq/replay.hpp"

#include <cmath>

#include "snnq/errors.hpp"

namespace snnq {

CompactObs CompactObs::from_tensor(const Tensor& obs) {
  CompactObs c;
  c.shape_ = obs.shape();
  c.units_.resize(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const float scaled = obs[i] * 4.0f;
    const float rounded = std::nearbyintf(scaled);
    if (scaled != rounded || rounded < 0.0f || rounded > 255.0f) {
      throw ValidationError(
          "observation value " + std::to_string(obs[i]) +
          " is not a quarter-intensity step in [0, 63.75]; cannot store it "
          "compactly");
    }
    c.units_[i] = static_cast<std::uint8_t>(rounded);
  }
  return c;
}

Tensor CompactObs::to_tensor() const {
  Tensor t(shape_);
  for (std::size_t i = 0; i < units_.size(); ++i) {
    t[i] = static_cast<float>(units_[i]) * 0.25f;
  }
  return t;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) {
    throw ValidationError("replay buffer capacity must be positive");
  }
  ring_.resize(capacity_);
}

void ReplayBuffer::push(Transition t) {
  ring_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) {
    throw ValidationError("replay index " + std::to_string(i) +
                          " out of range for size " + std::to_string(size_));
  }
  const std::size_t oldest = size_ < capacity_ ? 0 : head_;
  return ring_[(oldest + i) % capacity_];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count,
                                                      Rng& rng) const {
  if (size_ == 0) {
    throw ProtocolError("cannot sample from an empty replay buffer");
  }
  std::vector<std::size_t> out(count);
  for (auto& i : out) {
    i = uniform_below(rng, static_cast<std::uint32_t>(size_));
  }
  return out;
}

}  // namespace snnq
