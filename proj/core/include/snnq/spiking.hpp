#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "snnq/network.hpp"
#include "snnq/neuron.hpp"

namespace snnq {

/// One positive weight multiplier per network layer.
struct ScaleVector {
  std::vector<float> values;

  static ScaleVector ones(std::size_t n) {
    ScaleVector s;
    s.values.assign(n, 1.0f);
    return s;
  }
  void validate(std::size_t expected_layers) const;
};

struct SnnOutput {
  /// Output spike counts over the window, one per action.
  Tensor q_estimates;
  /// Per-layer total spike counts.
  std::vector<Tensor> spike_counts;
};

/// A spiking twin of a ReLU network. Layer l receives the previous layer's
/// spikes from the step before (one-step axonal delay); layer 0 receives the
/// observation as a constant current. Layer l's input current is scaled by
/// scales[l]. Q estimates are the output layer's spike counts.
class SpikingNetwork {
 public:
  SpikingNetwork(std::shared_ptr<const NetworkDescription> net,
                 ScaleVector scales, const NeuronConfig& neuron, int nt,
                 std::uint64_t seed = 0);

  /// Resets membranes, then simulates nt steps on this observation.
  SnnOutput forward(const Tensor& observation);

  void reseed(std::uint64_t seed);

  int nt() const { return nt_; }
  const ScaleVector& scales() const { return scales_; }
  const NetworkDescription& network() const { return *net_; }
  const NeuronConfig& neuron_config() const { return neuron_; }

 private:
  std::shared_ptr<const NetworkDescription> net_;
  ScaleVector scales_;
  NeuronConfig neuron_;
  int nt_;
  std::uint64_t seed_;
  std::vector<LayerState> states_;
};

/// Builds the spiking twin after validating the network, scales and window.
SpikingNetwork convert(std::shared_ptr<const NetworkDescription> net,
                       const ScaleVector& scales, const NeuronConfig& neuron,
                       int nt, std::uint64_t seed = 0);

/// Action selection over Q estimates. Greedy breaks ties toward the lowest
/// action index; epsilon-greedy explores uniformly with rate epsilon.
struct Policy {
  double epsilon = 0.0;

  static Policy greedy() { return Policy{0.0}; }
  static Policy epsilon_greedy(double eps);
  bool is_greedy() const { return epsilon == 0.0; }
  std::string name() const;
};

int select_action(const Tensor& q_estimates, const Policy& policy, Rng& rng);

}  // namespace snnq
