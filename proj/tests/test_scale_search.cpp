#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <vector>

#include "snnq/errors.hpp"
#include "snnq/network.hpp"
#include "snnq/rng.hpp"
#include "snnq/scale_search.hpp"

using namespace snnq;

namespace {

// Separable sphere in log space, maximum at (3, 0.5).
double sphere_fitness(const ScaleVector& s) {
  const double a = std::log(static_cast<double>(s.values[0]) / 3.0);
  const double b = std::log(static_cast<double>(s.values[1]) / 0.5);
  return -(a * a + b * b);
}

// Single dense layer over the full observation; cheap to convert and play.
NetworkDescription flat_net(float weight_scale, unsigned rng_seed) {
  NetworkDescription net;
  net.input_shape = {80, 80};
  net.n_actions = 4;
  LayerSpec out;
  out.kind = LayerKind::Dense;
  out.weights = Tensor({4, 6400});
  if (weight_scale != 0.0f) {
    Rng rng = make_rng(rng_seed);
    for (auto& v : out.weights.values()) {
      v = weight_scale * (2.0f * uniform01f(rng) - 1.0f);
    }
  }
  out.bias = Tensor({4});
  out.activation = Activation::Identity;
  net.layers = {out};
  return net;
}

}  // namespace

TEST_SUITE_BEGIN("scale_search");

TEST_CASE("default swarm size rounds the square-root rule") {
  CHECK(default_swarm_size(1) == 12);
  CHECK(default_swarm_size(2) == 13);
  CHECK(default_swarm_size(3) == 13);
  CHECK(default_swarm_size(5) == 14);
  CHECK(default_swarm_size(9) == 16);
  CHECK_THROWS_AS(default_swarm_size(0), ValidationError);
  CHECK_THROWS_AS(default_swarm_size(-2), ValidationError);
}

TEST_CASE("swarm config validation") {
  SwarmConfig good;
  CHECK_NOTHROW(good.validate());

  SwarmConfig c = good;
  c.dimensions = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.swarm_size = -1;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.iterations = -1;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.low = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.high = c.low;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.threads = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.warm_starts.push_back(ScaleVector::ones(3));  // wrong dimension count
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("pso finds a two-dimensional optimum from any seed") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SwarmConfig cfg;
    cfg.dimensions = 2;
    cfg.iterations = 50;
    cfg.seed = seed;
    const PsoResult r = pso_optimize(cfg, sphere_fitness);
    REQUIRE(r.best.values.size() == 2);
    CHECK(std::fabs(r.best.values[0] - 3.0) <= 0.05);
    CHECK(std::fabs(r.best.values[1] - 0.5) <= 0.05);
  }
}

TEST_CASE("pso history grows monotonically, one entry per iteration") {
  SwarmConfig cfg;
  cfg.iterations = 20;
  cfg.seed = 9;
  const PsoResult r = pso_optimize(cfg, sphere_fitness);
  REQUIRE(r.history.size() == 21);
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    CHECK(r.history[i] >= r.history[i - 1]);
  }
  CHECK(r.history.back() == r.best_fitness);
}

TEST_CASE("pso keeps every candidate inside the bounds") {
  SwarmConfig cfg;
  cfg.low = 0.5;
  cfg.high = 2.0;
  cfg.iterations = 15;
  cfg.seed = 4;
  std::mutex mu;
  bool ok = true;
  auto fitness = [&](const ScaleVector& s) {
    for (float v : s.values) {
      if (v < 0.5f * (1.0f - 1e-6f) || v > 2.0f * (1.0f + 1e-6f)) {
        std::lock_guard<std::mutex> lock(mu);
        ok = false;
      }
    }
    return sphere_fitness(s);
  };
  pso_optimize(cfg, fitness);
  CHECK(ok);
}

TEST_CASE("pso results do not depend on the thread count") {
  SwarmConfig cfg;
  cfg.iterations = 12;
  cfg.seed = 17;
  const PsoResult one = pso_optimize(cfg, sphere_fitness);
  cfg.threads = 3;
  const PsoResult three = pso_optimize(cfg, sphere_fitness);
  CHECK(one.best_fitness == three.best_fitness);
  REQUIRE(one.history.size() == three.history.size());
  for (std::size_t i = 0; i < one.history.size(); ++i) {
    CHECK(one.history[i] == three.history[i]);
  }
  for (std::size_t d = 0; d < 2; ++d) {
    CHECK(one.best.values[d] == three.best.values[d]);
  }
}

TEST_CASE("warm starts clamp into bounds and floor the global best") {
  ScaleVector near_opt;
  near_opt.values = {3.0f, 0.5f};
  SwarmConfig cfg;
  cfg.iterations = 0;  // only the initial evaluation runs
  cfg.warm_starts = {near_opt};
  const PsoResult r = pso_optimize(cfg, sphere_fitness);
  REQUIRE(r.history.size() == 1);
  CHECK(r.best_fitness >= sphere_fitness(near_opt));

  // A warm start outside the box lands on the boundary, not outside it.
  ScaleVector huge;
  huge.values = {1e6f, 1e6f};
  cfg.warm_starts = {huge};
  cfg.swarm_size = 1;
  const PsoResult clamped = pso_optimize(cfg, sphere_fitness);
  CHECK(clamped.best.values[0] == doctest::Approx(100.0));
  CHECK(clamped.best.values[1] == doctest::Approx(100.0));
}

TEST_CASE("pso observer sees every snapshot") {
  SwarmConfig cfg;
  cfg.iterations = 7;
  cfg.swarm_size = 5;
  int calls = 0;
  int last_iteration = -1;
  pso_optimize(cfg, sphere_fitness,
               [&](int iteration, const std::vector<Particle>& particles) {
                 CHECK(particles.size() == 5);
                 CHECK(iteration == last_iteration + 1);
                 last_iteration = iteration;
                 ++calls;
               });
  CHECK(calls == 8);
}

TEST_CASE("grid config validation") {
  GridConfig good;
  good.steps = {3, 3};
  CHECK_NOTHROW(good.validate());

  GridConfig c = good;
  c.steps = {};
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.steps = {3, 0};
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.low = -1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.threads = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.steps = {600, 600};  // 360000 points
  c.max_evaluations = 200000;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("one-step grid dimensions sit at the lower bound") {
  GridConfig cfg;
  cfg.steps = {1};
  cfg.low = 0.25;
  cfg.high = 8.0;
  const GridResult r = grid_search(cfg, [](const ScaleVector& s) {
    return static_cast<double>(s.values[0]);
  });
  CHECK(r.evaluations == 1);
  REQUIRE(r.best.values.size() == 1);
  CHECK(r.best.values[0] == doctest::Approx(0.25));
}

TEST_CASE("grid search hits an optimum that lies on the lattice") {
  GridConfig cfg;
  cfg.steps = {3, 3};
  cfg.low = 0.1;
  cfg.high = 10.0;  // axis points 0.1, 1, 10
  const GridResult r = grid_search(cfg, [](const ScaleVector& s) {
    const double a = static_cast<double>(s.values[0]) - 1.0;
    const double b = static_cast<double>(s.values[1]) - 10.0;
    return -(a * a + b * b);
  });
  CHECK(r.evaluations == 9);
  CHECK(r.best.values[0] == doctest::Approx(1.0));
  CHECK(r.best.values[1] == doctest::Approx(10.0));
  CHECK(r.best_fitness == doctest::Approx(0.0));
}

TEST_CASE("grid ties break toward the lexicographically smallest point") {
  GridConfig cfg;
  cfg.steps = {3, 3};
  cfg.low = 0.1;
  cfg.high = 10.0;
  const GridResult r = grid_search(cfg, [](const ScaleVector&) { return 7.0; });
  CHECK(r.best_fitness == 7.0);
  CHECK(r.best.values[0] == doctest::Approx(0.1));
  CHECK(r.best.values[1] == doctest::Approx(0.1));
}

TEST_CASE("grid search is thread-count invariant") {
  GridConfig cfg;
  cfg.steps = {4, 4};
  auto fitness = [](const ScaleVector& s) {
    return -std::fabs(std::log(static_cast<double>(s.values[0])) - 1.0) -
           std::fabs(std::log(static_cast<double>(s.values[1])) + 1.0);
  };
  const GridResult one = grid_search(cfg, fitness);
  cfg.threads = 3;
  const GridResult three = grid_search(cfg, fitness);
  CHECK(one.best_fitness == three.best_fitness);
  CHECK(one.best.values[0] == three.best.values[0]);
  CHECK(one.best.values[1] == three.best.values[1]);
}

TEST_CASE("percentile interpolates between order statistics") {
  std::vector<float> v = {5.0f, 3.0f, 1.0f, 4.0f, 2.0f};
  CHECK(percentile_of(v, 0.0) == 1.0);
  CHECK(percentile_of(v, 25.0) == 2.0);
  CHECK(percentile_of(v, 50.0) == 3.0);
  CHECK(percentile_of(v, 90.0) == doctest::Approx(4.6));
  CHECK(percentile_of(v, 100.0) == 5.0);
  CHECK(percentile_of({2.5f}, 99.9) == 2.5);

  CHECK_THROWS_AS(percentile_of({}, 50.0), ValidationError);
  CHECK_THROWS_AS(percentile_of(v, -1.0), ValidationError);
  CHECK_THROWS_AS(percentile_of(v, 100.5), ValidationError);
}

TEST_CASE("percentile is positively homogeneous") {
  Rng rng = make_rng(3);
  std::vector<float> v(200);
  for (auto& x : v) x = 10.0f * uniform01f(rng);
  std::vector<float> scaled = v;
  for (auto& x : scaled) x *= 4.0f;
  for (double p : {0.0, 10.0, 50.0, 99.9, 100.0}) {
    CHECK(percentile_of(scaled, p) ==
          doctest::Approx(4.0 * percentile_of(v, p)).epsilon(1e-5));
  }
}

TEST_CASE("normalization divides adjacent activation percentiles") {
  NetworkDescription net;
  net.input_shape = {1};
  net.n_actions = 1;
  LayerSpec out;
  out.kind = LayerKind::Dense;
  out.weights = Tensor({1, 1});
  out.weights.at(0, 0) = 2.0f;
  out.bias = Tensor({1});
  out.activation = Activation::Identity;
  net.layers = {out};

  Tensor a({1});
  a[0] = 0.5f;
  Tensor b({1});
  b[0] = 1.0f;

  const NormalizationResult r = normalize_scales(net, {a, b}, 100.0);
  REQUIRE(r.lambdas.size() == 2);
  CHECK(r.lambdas[0] == doctest::Approx(1.0));
  CHECK(r.lambdas[1] == doctest::Approx(2.0));
  REQUIRE(r.scales.values.size() == 1);
  CHECK(r.scales.values[0] == doctest::Approx(0.5));
  CHECK(r.warnings.empty());
}

TEST_CASE("normalization falls back to scale 1 on a silent layer") {
  NetworkDescription net;
  net.input_shape = {1};
  net.n_actions = 1;
  LayerSpec hidden;
  hidden.kind = LayerKind::Dense;
  hidden.weights = Tensor({1, 1});
  hidden.weights.at(0, 0) = 2.0f;
  hidden.bias = Tensor({1});
  hidden.activation = Activation::Relu;
  LayerSpec out;
  out.kind = LayerKind::Dense;
  out.weights = Tensor({1, 1});
  out.weights.at(0, 0) = -1.0f;  // output is never positive
  out.bias = Tensor({1});
  out.activation = Activation::Identity;
  net.layers = {hidden, out};

  Tensor a({1});
  a[0] = 0.5f;
  Tensor b({1});
  b[0] = 1.0f;

  const NormalizationResult r = normalize_scales(net, {a, b}, 100.0);
  REQUIRE(r.scales.values.size() == 2);
  CHECK(r.scales.values[0] == doctest::Approx(0.5));
  CHECK(r.scales.values[1] == 1.0f);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("layer 1") != std::string::npos);

  CHECK_THROWS_AS(normalize_scales(net, {}, 100.0), ValidationError);
}

TEST_CASE("normalization scales telescope to input over output") {
  Rng rng = make_rng(12);
  NetworkDescription net;
  net.input_shape = {3};
  net.n_actions = 2;
  LayerSpec hidden;
  hidden.kind = LayerKind::Dense;
  hidden.weights = Tensor({4, 3});
  for (auto& v : hidden.weights.values()) v = 0.5f * uniform01f(rng);
  hidden.bias = Tensor({4});
  hidden.activation = Activation::Relu;
  LayerSpec out;
  out.kind = LayerKind::Dense;
  out.weights = Tensor({2, 4});
  for (auto& v : out.weights.values()) v = 0.5f * uniform01f(rng);
  out.bias = Tensor({2});
  out.activation = Activation::Identity;
  net.layers = {hidden, out};

  std::vector<Tensor> samples;
  for (int k = 0; k < 30; ++k) {
    Tensor x({3});
    for (auto& v : x.values()) v = 0.5f + uniform01f(rng);
    samples.push_back(std::move(x));
  }

  const NormalizationResult r = normalize_scales(net, samples);
  REQUIRE(r.warnings.empty());
  double product = 1.0;
  for (float s : r.scales.values) {
    CHECK(s > 0.0f);
    product *= static_cast<double>(s);
  }
  CHECK(product ==
        doctest::Approx(r.lambdas.front() / r.lambdas.back()).epsilon(1e-5));
}

TEST_CASE("fitness context derives one shared seed per episode") {
  auto net = std::make_shared<const NetworkDescription>(flat_net(0.01f, 5));
  const FitnessContext ctx = FitnessContext::make(net, 3, 42);
  REQUIRE(ctx.seeds.size() == 3);
  CHECK(ctx.seeds[0] != ctx.seeds[1]);
  CHECK(ctx.seeds[1] != ctx.seeds[2]);
  CHECK(ctx.seeds[0] == episode_seed(42, 0, false));
  CHECK(ctx.nt == 500);

  CHECK_THROWS_AS(FitnessContext::make(net, 0, 42), ValidationError);

  FitnessContext bad = ctx;
  bad.net = nullptr;
  CHECK_THROWS_AS(game_fitness(bad, ScaleVector::ones(1)), ValidationError);
  bad = ctx;
  bad.seeds.clear();
  CHECK_THROWS_AS(game_fitness(bad, ScaleVector::ones(1)), ValidationError);
}

TEST_CASE("a silent network scores exactly like the always-noop agent") {
  auto net = std::make_shared<const NetworkDescription>(flat_net(0.0f, 0));
  FitnessContext ctx = FitnessContext::make(net, 2, 11);

  std::vector<double> noop_rewards;
  for (std::uint64_t seed : ctx.seeds) {
    ConstantAgent agent(0);
    noop_rewards.push_back(run_episode(agent, seed, ctx.spec).reward);
  }
  CHECK(game_fitness(ctx, ScaleVector::ones(1)) == mean_of(noop_rewards));
}

TEST_CASE("game fitness replays the same seeds deterministically") {
  auto net = std::make_shared<const NetworkDescription>(flat_net(0.01f, 21));
  FitnessContext ctx = FitnessContext::make(net, 2, 33);
  ScaleVector s;
  s.values = {2.0f};
  const double first = game_fitness(ctx, s);
  const double second = game_fitness(ctx, s);
  CHECK(first == second);
  ctx.threads = 2;
  CHECK(game_fitness(ctx, s) == first);
}

TEST_CASE("policy observation collection respects budget and occlusion") {
  auto net = std::make_shared<const NetworkDescription>(flat_net(0.01f, 8));
  EpisodeSpec spec;
  const auto samples = collect_policy_observations(net, spec, 2, 40, 5);
  REQUIRE(samples.size() == 40);
  for (const Tensor& s : samples) {
    REQUIRE(s.shape() == std::vector<int>{80, 80});
    for (float v : s.values()) {
      CHECK(v >= 0.0f);
      CHECK(v <= 2.5f);
    }
  }

  EpisodeSpec occluded;
  occluded.occlusion_bar = 10;
  const auto dark = collect_policy_observations(net, occluded, 1, 5, 5);
  REQUIRE(!dark.empty());
  for (const Tensor& s : dark) {
    for (int r = 10; r < 13; ++r) {
      for (int c = 0; c < 80; ++c) {
        CHECK(s.at(r, c) == 0.0f);
      }
    }
  }

  CHECK_THROWS_AS(collect_policy_observations(nullptr, spec, 1, 5, 5),
                  ValidationError);
  CHECK_THROWS_AS(collect_policy_observations(net, spec, 0, 5, 5),
                  ValidationError);
  CHECK_THROWS_AS(collect_policy_observations(net, spec, 1, 0, 5),
                  ValidationError);
}

TEST_SUITE_END();
