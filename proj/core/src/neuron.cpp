#include "snnq/neuron.hpp"

#include <cmath>

#include "snnq/errors.hpp"

namespace snnq {

const char* to_string(NeuronKind kind) {
  switch (kind) {
    case NeuronKind::IF: return "if";
    case NeuronKind::SubIF: return "subif";
    case NeuronKind::LIF: return "lif";
    case NeuronKind::StochasticLIF: return "stochastic-lif";
  }
  return "?";
}

NeuronKind neuron_kind_from_string(const std::string& name) {
  if (name == "if") return NeuronKind::IF;
  if (name == "subif") return NeuronKind::SubIF;
  if (name == "lif") return NeuronKind::LIF;
  if (name == "stochastic-lif") return NeuronKind::StochasticLIF;
  throw ValidationError("unknown neuron kind '" + name +
                        "' (expected if, subif, lif, stochastic-lif)");
}

void NeuronConfig::validate() const {
  if (!(dt > 0.0f)) {
    throw ValidationError("neuron dt must be positive, got " +
                          std::to_string(dt));
  }
  if (!(tau > 0.0f)) {
    throw ValidationError("neuron tau must be positive, got " +
                          std::to_string(tau));
  }
  if (!(tau_sigma > 0.0f)) {
    throw ValidationError("neuron tau_sigma must be positive, got " +
                          std::to_string(tau_sigma));
  }
  if (!(v_thresh > v_reset)) {
    throw ValidationError("neuron v_thresh (" + std::to_string(v_thresh) +
                          ") must exceed v_reset (" + std::to_string(v_reset) +
                          ")");
  }
  if (!(v_thresh > v_rest)) {
    throw ValidationError("neuron v_thresh (" + std::to_string(v_thresh) +
                          ") must exceed v_rest (" + std::to_string(v_rest) +
                          ")");
  }
  if (!std::isfinite(v_rest) || !std::isfinite(v_thresh) ||
      !std::isfinite(v_reset) || !std::isfinite(beta_sigma)) {
    throw ValidationError("neuron parameters must be finite");
  }
}

LayerState LayerState::start(std::vector<int> shape, const NeuronConfig& cfg,
                             std::uint64_t seed) {
  cfg.validate();
  LayerState s;
  s.v = Tensor::full(std::move(shape), cfg.v_rest);
  s.rng = make_rng(seed);
  return s;
}

void LayerState::rest(const NeuronConfig& cfg) {
  for (auto& x : v.values()) x = cfg.v_rest;
}

void LayerState::reseed(std::uint64_t seed) { rng = make_rng(seed); }

namespace {

[[noreturn]] void throw_diverged(std::size_t index, float current) {
  throw NumericError("membrane potential diverged at neuron " +
                     std::to_string(index) + " (input current " +
                     std::to_string(current) + ")");
}

}  // namespace

Tensor step(LayerState& state, const Tensor& input_current,
            const NeuronConfig& cfg) {
  if (!state.v.same_shape(input_current)) {
    throw DimensionError("neuron step: state shape " +
                         shape_to_string(state.v.shape()) +
                         " does not match input current shape " +
                         shape_to_string(input_current.shape()));
  }

  const std::size_t n = state.v.size();
  float* v = state.v.data();
  const float* in = input_current.data();
  Tensor spikes(state.v.shape());
  float* out = spikes.data();

  const float drive = cfg.dt / cfg.tau;
  switch (cfg.kind) {
    case NeuronKind::IF:
      for (std::size_t i = 0; i < n; ++i) {
        float u = v[i] + drive * in[i];
        if (!std::isfinite(u)) throw_diverged(i, in[i]);
        if (u >= cfg.v_thresh) {
          out[i] = 1.0f;
          u = cfg.v_reset;
        }
        v[i] = u;
      }
      break;
    case NeuronKind::SubIF:
      for (std::size_t i = 0; i < n; ++i) {
        float u = v[i] + drive * in[i];
        if (!std::isfinite(u)) throw_diverged(i, in[i]);
        if (u >= cfg.v_thresh) {
          out[i] = 1.0f;
          u = cfg.v_reset + (u - cfg.v_thresh);
        }
        v[i] = u;
      }
      break;
    case NeuronKind::LIF:
      for (std::size_t i = 0; i < n; ++i) {
        float u = v[i] + drive * (-(v[i] - cfg.v_rest) + in[i]);
        if (!std::isfinite(u)) throw_diverged(i, in[i]);
        if (u >= cfg.v_thresh) {
          out[i] = 1.0f;
          u = cfg.v_reset;
        }
        v[i] = u;
      }
      break;
    case NeuronKind::StochasticLIF:
      for (std::size_t i = 0; i < n; ++i) {
        float u = v[i] + drive * (-(v[i] - cfg.v_rest) + in[i]);
        if (!std::isfinite(u)) throw_diverged(i, in[i]);
        const float sigma_raw =
            std::exp(cfg.beta_sigma * (u - cfg.v_thresh)) / cfg.tau_sigma;
        const float sigma = sigma_raw < 1.0f ? sigma_raw : 1.0f;
        if (uniform01f(state.rng) < sigma) {
          out[i] = 1.0f;
          u = cfg.v_reset;
        }
        v[i] = u;
      }
      break;
  }
  return spikes;
}

long constant_input_rate(float current, const NeuronConfig& cfg, int nt,
                         std::uint64_t seed) {
  if (nt < 1) {
    throw ValidationError("simulation window nt must be at least 1, got " +
                          std::to_string(nt));
  }
  LayerState state = LayerState::start({1}, cfg, seed);
  const Tensor drive({1}, {current});
  long count = 0;
  for (int t = 0; t < nt; ++t) {
    const Tensor spikes = step(state, drive, cfg);
    count += spikes[0] != 0.0f ? 1 : 0;
  }
  return count;
}

}  // namespace snnq
