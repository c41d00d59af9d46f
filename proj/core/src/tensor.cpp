#include "snnq/tensor.hpp"

#include <cstddef>
#include <numeric>
#include <sstream>

namespace snnq {

namespace {

std::size_t checked_volume(const std::vector<int>& shape) {
  if (shape.empty() || shape.size() > 4) {
    throw DimensionError("tensor rank must be 1 to 4, got shape " +
                         shape_to_string(shape));
  }
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) {
      throw DimensionError("tensor dimensions must be positive, got shape " +
                           shape_to_string(shape));
    }
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

}  // namespace

std::string shape_to_string(const std::vector<int>& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  data_.assign(checked_volume(shape_), 0.0f);
}

Tensor::Tensor(std::vector<int> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  const std::size_t need = checked_volume(shape_);
  if (need != data_.size()) {
    throw DimensionError("tensor shape " + shape_to_string(shape_) +
                         " wants " + std::to_string(need) + " values, got " +
                         std::to_string(data_.size()));
  }
}

Tensor Tensor::full(std::vector<int> shape, float value) {
  Tensor t(std::move(shape));
  for (auto& v : t.data_) v = value;
  return t;
}

Tensor Tensor::reshaped(std::vector<int> new_shape) const {
  const std::size_t need = checked_volume(new_shape);
  if (need != data_.size()) {
    throw DimensionError("cannot reshape " + shape_to_string(shape_) + " to " +
                         shape_to_string(new_shape) + ": element counts differ");
  }
  return Tensor(std::move(new_shape), data_);
}

Tensor Tensor::flattened() const {
  return reshaped({static_cast<int>(data_.size())});
}

Tensor dense_forward(const Tensor& input, const Tensor& weights,
                     const Tensor& bias) {
  if (weights.rank() != 2) {
    throw DimensionError("dense weights must be rank 2, got shape " +
                         shape_to_string(weights.shape()));
  }
  const int m = weights.dim(0);
  const int n = weights.dim(1);
  if (static_cast<std::size_t>(n) != input.size()) {
    throw DimensionError("dense weights " + shape_to_string(weights.shape()) +
                         " do not accept input " +
                         shape_to_string(input.shape()));
  }
  if (bias.rank() != 1 || bias.dim(0) != m) {
    throw DimensionError("dense bias " + shape_to_string(bias.shape()) +
                         " does not match weights " +
                         shape_to_string(weights.shape()));
  }

  Tensor out({m});
  float* o = out.data();
  const float* b = bias.data();
  for (int j = 0; j < m; ++j) o[j] = b[j];

  // Column-major accumulation: for each input index i in ascending order,
  // add x_i * W[:, i]. Each output sees the same addend sequence as a naive
  // row dot product, and indices with x_i == 0 contribute exactly nothing,
  // so they are skipped.
  const float* x = input.data();
  const float* w = weights.data();
  for (int i = 0; i < n; ++i) {
    const float xi = x[i];
    if (xi == 0.0f) continue;
    const float* col = w + static_cast<std::size_t>(i);
    for (int j = 0; j < m; ++j) {
      o[j] += xi * col[static_cast<std::size_t>(j) * static_cast<std::size_t>(n)];
    }
  }
  return out;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels,
                      const Tensor& bias, int stride) {
  if (stride < 1) {
    throw ValidationError("conv2d stride must be positive, got " +
                          std::to_string(stride));
  }
  if (input.rank() != 3) {
    throw DimensionError("conv2d input must be rank 3 [C, H, W], got shape " +
                         shape_to_string(input.shape()));
  }
  if (kernels.rank() != 4) {
    throw DimensionError(
        "conv2d kernels must be rank 4 [K, C, kh, kw], got shape " +
        shape_to_string(kernels.shape()));
  }
  const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int k = kernels.dim(0), kc = kernels.dim(1);
  const int kh = kernels.dim(2), kw = kernels.dim(3);
  if (kc != c) {
    throw DimensionError("conv2d kernels " + shape_to_string(kernels.shape()) +
                         " do not accept input " +
                         shape_to_string(input.shape()));
  }
  if (kh > h || kw > w) {
    throw DimensionError("conv2d kernel " + shape_to_string(kernels.shape()) +
                         " larger than input " +
                         shape_to_string(input.shape()));
  }
  if (bias.rank() != 1 || bias.dim(0) != k) {
    throw DimensionError("conv2d bias " + shape_to_string(bias.shape()) +
                         " does not match kernels " +
                         shape_to_string(kernels.shape()));
  }

  const int oh = (h - kh) / stride + 1;
  const int ow = (w - kw) / stride + 1;
  Tensor out({k, oh, ow});
  for (int ko = 0; ko < k; ++ko) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        float acc = bias[static_cast<std::size_t>(ko)];
        for (int ci = 0; ci < c; ++ci) {
          for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
              acc += input.at(ci, oy * stride + ky, ox * stride + kx) *
                     kernels.at(ko, ci, ky, kx);
            }
          }
        }
        out.at(ko, oy, ox) = acc;
      }
    }
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.values()) {
    if (v < 0.0f) v = 0.0f;
  }
  return out;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shapes " +
                         shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()) + " differ");
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Tensor scaled(const Tensor& x, float s) {
  Tensor out = x;
  for (auto& v : out.values()) v *= s;
  return out;
}

void add_in_place(Tensor& acc, const Tensor& x) {
  require_same_shape(acc, x, "add_in_place");
  float* a = acc.data();
  const float* b = x.data();
  const std::size_t n = acc.size();
  for (std::size_t i = 0; i < n; ++i) a[i] += b[i];
}

void scale_in_place(Tensor& x, float s) {
  for (auto& v : x.values()) v *= s;
}

float max_value(const Tensor& x) {
  float best = x[0];
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] > best) best = x[i];
  }
  return best;
}

float min_value(const Tensor& x) {
  float best = x[0];
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] < best) best = x[i];
  }
  return best;
}

double sum(const Tensor& x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i];
  return acc;
}

int argmax(const Tensor& x) {
  int best = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] > x[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace snnq
