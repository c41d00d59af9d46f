#include <benchmark/benchmark.h>

#include "snnq/network.hpp"
#include "snnq/rng.hpp"
#include "snnq/tensor.hpp"

using namespace snnq;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double density = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) {
    v = uniform01(rng) < density ? 2.0f * uniform01f(rng) - 1.0f : 0.0f;
  }
  return t;
}

void bench_dense_forward(benchmark::State& state) {
  Rng rng = make_rng(1);
  const double density = static_cast<double>(state.range(0)) / 100.0;
  const Tensor w = random_tensor({1000, 6400}, rng);
  const Tensor b = random_tensor({1000}, rng);
  const Tensor x = random_tensor({6400}, rng, density);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dense_forward(x, w, b));
  }
}

void bench_conv_forward(benchmark::State& state) {
  Rng rng = make_rng(2);
  const Tensor w = random_tensor({32, 4, 8, 8}, rng);
  const Tensor b = random_tensor({32}, rng);
  const Tensor x = random_tensor({4, 84, 84}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv2d_forward(x, w, b, 4));
  }
}

void bench_shallow_ann(benchmark::State& state) {
  Rng rng = make_rng(3);
  const NetworkDescription net = make_shallow_preset(4, 7);
  const Tensor x = random_tensor({6400}, rng, 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ann_forward(net, x));
  }
}

}  // namespace

// Observations are mostly zeros, so the sparse path dominates training time.
BENCHMARK(bench_dense_forward)->Arg(100)->Arg(10)->Arg(1);
BENCHMARK(bench_conv_forward);
BENCHMARK(bench_shallow_ann);

BENCHMARK_MAIN();
