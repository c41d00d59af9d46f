#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "snnq/errors.hpp"

namespace snnq {

std::string shape_to_string(const std::vector<int>& shape);

/// Dense numeric array, row-major, 1 to 4 dimensions, float32 storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<float> data);
  static Tensor full(std::vector<int> shape, float value);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return data_.size(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::vector<float>& values() { return data_; }
  const std::vector<float>& values() const { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  float& at(int i, int j) { return data_[flat(i, j)]; }
  float at(int i, int j) const { return data_[flat(i, j)]; }
  float& at(int i, int j, int k) { return data_[flat(i, j, k)]; }
  float at(int i, int j, int k) const { return data_[flat(i, j, k)]; }
  float& at(int i, int j, int k, int l) { return data_[flat(i, j, k, l)]; }
  float at(int i, int j, int k, int l) const { return data_[flat(i, j, k, l)]; }

  /// Same data under a new shape; sizes must agree.
  Tensor reshaped(std::vector<int> new_shape) const;
  Tensor flattened() const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  std::size_t flat(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(shape_[1]) +
           static_cast<std::size_t>(j);
  }
  std::size_t flat(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(shape_[1]) +
            static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(shape_[2]) +
           static_cast<std::size_t>(k);
  }
  std::size_t flat(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * static_cast<std::size_t>(shape_[1]) +
             static_cast<std::size_t>(j)) *
                static_cast<std::size_t>(shape_[2]) +
            static_cast<std::size_t>(k)) *
               static_cast<std::size_t>(shape_[3]) +
           static_cast<std::size_t>(l);
  }

  std::vector<int> shape_;
  std::vector<float> data_;
};

/// weights [m, n] times input [n] plus bias [m]. Exactly skips zero inputs;
/// the per-output accumulation order matches the naive ascending-index dot
/// product, so the skip changes nothing bit-wise.
Tensor dense_forward(const Tensor& input, const Tensor& weights,
                     const Tensor& bias);

/// Valid (no padding) cross-correlation. input [C, H, W], kernels
/// [K, C, kh, kw], bias [K], positive stride. Accumulation order per output
/// element: bias first, then channels outermost, kernel rows, kernel columns.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels,
                      const Tensor& bias, int stride);

Tensor relu(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scaled(const Tensor& x, float s);
void add_in_place(Tensor& acc, const Tensor& x);
void scale_in_place(Tensor& x, float s);

float max_value(const Tensor& x);
float min_value(const Tensor& x);
double sum(const Tensor& x);
/// Index of the maximum element; ties resolve to the lowest index.
int argmax(const Tensor& x);

}  // namespace snnq
