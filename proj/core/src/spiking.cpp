#include "snnq/spiking.hpp"

#include <cmath>

#include "snnq/errors.hpp"

namespace snnq {

void ScaleVector::validate(std::size_t expected_layers) const {
  if (values.size() != expected_layers) {
    throw ValidationError("scale vector has " + std::to_string(values.size()) +
                          " entries for a network with " +
                          std::to_string(expected_layers) + " layers");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0f) || !std::isfinite(values[i])) {
      throw ValidationError("scale " + std::to_string(i) +
                            " must be a positive finite value, got " +
                            std::to_string(values[i]));
    }
  }
}

SpikingNetwork::SpikingNetwork(std::shared_ptr<const NetworkDescription> net,
                               ScaleVector scales, const NeuronConfig& neuron,
                               int nt, std::uint64_t seed)
    : net_(std::move(net)),
      scales_(std::move(scales)),
      neuron_(neuron),
      nt_(nt),
      seed_(seed) {
  if (!net_) throw ValidationError("spiking network needs a source network");
  net_->validate();
  scales_.validate(net_->layer_count());
  neuron_.validate();
  if (nt_ < 1) {
    throw ValidationError("simulation window nt must be at least 1, got " +
                          std::to_string(nt_));
  }
  std::vector<int> shape = net_->input_shape;
  for (std::size_t l = 0; l < net_->layer_count(); ++l) {
    shape = net_->layers[l].output_shape(shape);
    states_.push_back(
        LayerState::start(shape, neuron_, derive_seed(seed_, l, 0x5117)));
  }
}

void SpikingNetwork::reseed(std::uint64_t seed) {
  seed_ = seed;
  for (std::size_t l = 0; l < states_.size(); ++l) {
    states_[l].reseed(derive_seed(seed_, l, 0x5117));
  }
}

SnnOutput SpikingNetwork::forward(const Tensor& observation) {
  const std::size_t depth = net_->layer_count();
  for (auto& s : states_) s.rest(neuron_);

  // Layer 0 sees a constant current for the whole window; compute it once.
  Tensor input_current = net_->layers[0].apply_linear(observation);
  scale_in_place(input_current, scales_.values[0]);

  std::vector<Tensor> counts;
  std::vector<Tensor> prev;
  counts.reserve(depth);
  prev.reserve(depth);
  for (const auto& s : states_) {
    counts.emplace_back(s.v.shape());
    prev.emplace_back(s.v.shape());
  }

  for (int t = 0; t < nt_; ++t) {
    for (std::size_t l = 0; l < depth; ++l) {
      Tensor spikes;
      if (l == 0) {
        spikes = step(states_[0], input_current, neuron_);
      } else {
        Tensor current = net_->layers[l].apply_linear(prev[l - 1]);
        scale_in_place(current, scales_.values[l]);
        spikes = step(states_[l], current, neuron_);
      }
      add_in_place(counts[l], spikes);
      prev[l] = std::move(spikes);
    }
  }

  SnnOutput out;
  out.q_estimates = counts.back();
  out.spike_counts = std::move(counts);
  return out;
}

SpikingNetwork convert(std::shared_ptr<const NetworkDescription> net,
                       const ScaleVector& scales, const NeuronConfig& neuron,
                       int nt, std::uint64_t seed) {
  return SpikingNetwork(std::move(net), scales, neuron, nt, seed);
}

Policy Policy::epsilon_greedy(double eps) {
  if (eps < 0.0 || eps > 1.0) {
    throw ValidationError("epsilon must lie in [0, 1], got " +
                          std::to_string(eps));
  }
  return Policy{eps};
}

std::string Policy::name() const {
  if (is_greedy()) return "greedy";
  return "epsilon-greedy(" + std::to_string(epsilon) + ")";
}

int select_action(const Tensor& q_estimates, const Policy& policy, Rng& rng) {
  if (q_estimates.size() == 0) {
    throw ValidationError("select_action needs at least one Q estimate");
  }
  if (policy.epsilon > 0.0 && uniform01(rng) < policy.epsilon) {
    return static_cast<int>(
        uniform_below(rng, static_cast<std::uint32_t>(q_estimates.size())));
  }
  return argmax(q_estimates);
}

}  // namespace snnq
