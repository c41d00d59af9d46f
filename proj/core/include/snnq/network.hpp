#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snnq/tensor.hpp"

namespace snnq {

enum class LayerKind { Dense, Conv2d };
enum class Activation { Relu, Identity };

const char* to_string(LayerKind kind);
const char* to_string(Activation act);

/// One layer of a feed-forward network. Dense layers flatten their input.
struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  Tensor weights;  // dense: [m, n]; conv: [K, C, kh, kw]
  Tensor bias;     // dense: [m];    conv: [K]
  int stride = 1;  // conv only
  Activation activation = Activation::Relu;

  std::vector<int> output_shape(const std::vector<int>& input_shape) const;
  /// W x + b without the activation.
  Tensor apply_linear(const Tensor& input) const;
};

/// An ordered stack of layers plus the input contract.
struct NetworkDescription {
  std::vector<LayerSpec> layers;
  std::vector<int> input_shape;
  int n_actions = 0;

  std::size_t layer_count() const { return layers.size(); }
  /// Shapes compose, hidden layers are relu, the last layer is identity
  /// dense with n_actions outputs. Throws ValidationError or DimensionError.
  void validate() const;
};

/// Full forward pass; returns one value per action.
Tensor ann_forward(const NetworkDescription& net, const Tensor& observation);

/// Forward pass that also returns every intermediate post-activation tensor
/// (activations[0] is the first layer's output).
std::vector<Tensor> ann_forward_layers(const NetworkDescription& net,
                                       const Tensor& observation);

/// 6400 -> 1000 relu -> n_actions, over a flattened 80x80 observation.
/// He-normal weights, zero biases.
NetworkDescription make_shallow_preset(int n_actions, std::uint64_t seed);

/// 4x84x84 -> conv 32@8x8/4 -> conv 64@4x4/2 -> conv 64@3x3/1 ->
/// dense 512 -> n_actions, all hidden relu.
NetworkDescription make_deep_preset(int n_actions, std::uint64_t seed);

/// JSON weight file with base64 float32 payloads. Little-endian on disk.
void save_weights(const NetworkDescription& net, const std::string& path);
NetworkDescription load_weights(const std::string& path);

}  // namespace snnq
