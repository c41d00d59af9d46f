#include <benchmark/benchmark.h>

#include "snnq/breakout.hpp"
#include "snnq/preprocess.hpp"

using namespace snnq;

namespace {

void bench_env_step(benchmark::State& state) {
  BreakoutEnv env;
  env.reset(1);
  for (auto _ : state) {
    if (env.done()) env.reset(1);
    benchmark::DoNotOptimize(env.step(EnvAction::Left));
  }
}

void bench_full_observation(benchmark::State& state) {
  const InputMode mode =
      state.range(0) == 0 ? InputMode::Binary : InputMode::Grayscale;
  BreakoutEnv env;
  env.reset(1);
  FrameStack stack(mode);
  stack.push(env.frame());
  for (auto _ : state) {
    if (env.done()) {
      env.reset(1);
      stack.clear();
      stack.push(env.frame());
    }
    env.step(EnvAction::Right);
    stack.push(env.frame());
    benchmark::DoNotOptimize(stack.observation());
  }
}

}  // namespace

BENCHMARK(bench_env_step);
BENCHMARK(bench_full_observation)->Arg(0)->Arg(1);

BENCHMARK_MAIN();
