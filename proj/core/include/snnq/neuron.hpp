#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snnq/rng.hpp"
#include "snnq/tensor.hpp"

namespace snnq {

enum class NeuronKind { IF, SubIF, LIF, StochasticLIF };

const char* to_string(NeuronKind kind);
NeuronKind neuron_kind_from_string(const std::string& name);

/// Parameters shared by every neuron in one layer. Integration is forward
/// Euler with step dt; a spike fires when v crosses v_thresh from below
/// (IF, SubIF, LIF) or stochastically with escape rate
/// sigma = min(1, (1/tau_sigma) * exp(beta_sigma * (v - v_thresh)))
/// (StochasticLIF). IF and LIF reset to v_reset; SubIF resets to
/// v_reset + (v - v_thresh), carrying the overshoot into the next step.
struct NeuronConfig {
  NeuronKind kind = NeuronKind::SubIF;
  float v_rest = 0.0f;
  float v_thresh = 1.0f;
  float v_reset = 0.0f;
  float tau = 1.0f;
  float tau_sigma = 1.0f;
  float beta_sigma = 1.0f;
  float dt = 1.0f;

  void validate() const;
};

/// Mutable state of one simulated layer: a membrane potential per neuron and
/// the noise stream consumed by stochastic kinds.
struct LayerState {
  Tensor v;
  Rng rng;

  static LayerState start(std::vector<int> shape, const NeuronConfig& cfg,
                          std::uint64_t seed);
  /// Membranes back to rest; the noise stream is left untouched.
  void rest(const NeuronConfig& cfg);
  void reseed(std::uint64_t seed);
};

/// One integration step for a whole layer. `input_current` must match the
/// state's shape. Returns the 0/1 spike tensor and updates `state` in place.
Tensor step(LayerState& state, const Tensor& input_current,
            const NeuronConfig& cfg);

/// Spikes emitted by a single neuron over nt steps under a constant input
/// current, starting from rest. Divide by nt for the firing rate.
long constant_input_rate(float current, const NeuronConfig& cfg, int nt,
                         std::uint64_t seed = 0);

}  // namespace snnq
