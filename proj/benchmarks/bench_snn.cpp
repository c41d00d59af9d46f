#include <benchmark/benchmark.h>

#include <memory>

#include "snnq/neuron.hpp"
#include "snnq/rng.hpp"
#include "snnq/spiking.hpp"

using namespace snnq;

namespace {

NeuronConfig neuron_of(int kind) {
  NeuronConfig cfg;
  cfg.kind = static_cast<NeuronKind>(kind);
  return cfg;
}

void bench_snn_forward(benchmark::State& state) {
  const auto net = std::make_shared<const NetworkDescription>(
      make_shallow_preset(4, 11));
  SpikingNetwork snn = convert(net, ScaleVector::ones(2),
                               neuron_of(static_cast<int>(state.range(0))),
                               500);
  Rng rng = make_rng(5);
  Tensor obs({6400});
  for (auto& v : obs.values()) {
    v = uniform01(rng) < 0.01 ? 1.0f : 0.0f;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(snn.forward(obs));
  }
}

void bench_layer_step(benchmark::State& state) {
  const NeuronConfig cfg = neuron_of(static_cast<int>(state.range(0)));
  LayerState layer = LayerState::start({1000}, cfg, 99);
  const Tensor current = Tensor::full({1000}, 0.4f);
  for (auto _ : state) {
    benchmark::DoNotOptimize(step(layer, current, cfg));
  }
}

}  // namespace

// 0 = if, 1 = subif, 2 = lif, 3 = stochastic lif.
BENCHMARK(bench_snn_forward)->DenseRange(0, 3);
BENCHMARK(bench_layer_step)->DenseRange(0, 3);

BENCHMARK_MAIN();
