#include "snnq/scale_search.hpp"

#include <algorithm>
#include <cmath>

#include "snnq/errors.hpp"
#include "snnq/parallel.hpp"

namespace snnq {

int default_swarm_size(int dimensions) {
  if (dimensions < 1) {
    throw ValidationError("swarm dimensions must be positive, got " +
                          std::to_string(dimensions));
  }
  // Rounded to nearest so D=2 gives the canonical S=13 (and D=5 gives 14).
  return 10 + static_cast<int>(
                  std::lround(2.0 * std::sqrt(static_cast<double>(dimensions))));
}

void SwarmConfig::validate() const {
  if (dimensions < 1) {
    throw ValidationError("swarm dimensions must be positive");
  }
  if (swarm_size < 0) {
    throw ValidationError("swarm size must be non-negative (0 = default)");
  }
  if (iterations < 0) throw ValidationError("iterations must be non-negative");
  if (!(low > 0.0) || !(high > low)) {
    throw ValidationError("scale bounds must satisfy 0 < low < high, got [" +
                          std::to_string(low) + ", " + std::to_string(high) +
                          "]");
  }
  if (threads < 1) throw ValidationError("threads must be positive");
  for (const ScaleVector& w : warm_starts) {
    w.validate(static_cast<std::size_t>(dimensions));
  }
}

namespace {

ScaleVector to_scales(const std::vector<double>& log_position) {
  ScaleVector s;
  s.values.reserve(log_position.size());
  for (double x : log_position) {
    s.values.push_back(static_cast<float>(std::exp(x)));
  }
  return s;
}

}  // namespace

PsoResult pso_optimize(const SwarmConfig& cfg, const FitnessFn& fitness,
                       const SwarmObserver& observer) {
  cfg.validate();
  const int dim = cfg.dimensions;
  const int swarm =
      cfg.swarm_size == 0 ? default_swarm_size(dim) : cfg.swarm_size;
  if (swarm < 1) throw ValidationError("swarm must have at least 1 particle");

  const double lo = std::log(cfg.low);
  const double hi = std::log(cfg.high);
  const double v_max = hi - lo;

  // One stream per particle; swarm behaviour is independent of how fitness
  // evaluations are scheduled.
  std::vector<Rng> streams;
  streams.reserve(static_cast<std::size_t>(swarm));
  for (int p = 0; p < swarm; ++p) {
    streams.push_back(
        make_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(p), 0xb50)));
  }

  std::vector<Particle> particles(static_cast<std::size_t>(swarm));
  for (int p = 0; p < swarm; ++p) {
    Particle& part = particles[static_cast<std::size_t>(p)];
    part.position.resize(static_cast<std::size_t>(dim));
    part.velocity.assign(static_cast<std::size_t>(dim), 0.0);
    if (p < static_cast<int>(cfg.warm_starts.size())) {
      const ScaleVector& w = cfg.warm_starts[static_cast<std::size_t>(p)];
      for (int d = 0; d < dim; ++d) {
        part.position[static_cast<std::size_t>(d)] = std::clamp(
            std::log(static_cast<double>(
                w.values[static_cast<std::size_t>(d)])),
            lo, hi);
      }
    } else {
      for (int d = 0; d < dim; ++d) {
        part.position[static_cast<std::size_t>(d)] =
            lo + uniform01(streams[static_cast<std::size_t>(p)]) * (hi - lo);
      }
    }
  }

  const auto evaluate_all = [&] {
    parallel_for(particles.size(), cfg.threads, [&](std::size_t p) {
      particles[p].fitness = fitness(to_scales(particles[p].position));
    });
  };

  evaluate_all();
  for (auto& part : particles) {
    part.best_position = part.position;
    part.best_fitness = part.fitness;
  }
  std::size_t g = 0;
  for (std::size_t p = 1; p < particles.size(); ++p) {
    if (particles[p].best_fitness > particles[g].best_fitness) g = p;
  }

  PsoResult result;
  result.history.push_back(particles[g].best_fitness);
  if (observer) observer(0, particles);

  for (int it = 1; it <= cfg.iterations; ++it) {
    for (std::size_t p = 0; p < particles.size(); ++p) {
      Particle& part = particles[p];
      Rng& rng = streams[p];
      for (int d = 0; d < dim; ++d) {
        const std::size_t k = static_cast<std::size_t>(d);
        const double r1 = uniform01(rng);
        const double r2 = uniform01(rng);
        double v = cfg.inertia * part.velocity[k] +
                   cfg.cognitive * r1 * (part.best_position[k] - part.position[k]) +
                   cfg.social * r2 *
                       (particles[g].best_position[k] - part.position[k]);
        v = std::clamp(v, -v_max, v_max);
        part.velocity[k] = v;
        part.position[k] = std::clamp(part.position[k] + v, lo, hi);
      }
    }
    evaluate_all();
    for (auto& part : particles) {
      if (part.fitness > part.best_fitness) {
        part.best_fitness = part.fitness;
        part.best_position = part.position;
      }
    }
    for (std::size_t p = 0; p < particles.size(); ++p) {
      if (particles[p].best_fitness > particles[g].best_fitness) g = p;
    }
    result.history.push_back(particles[g].best_fitness);
    if (observer) observer(it, particles);
  }

  result.best = to_scales(particles[g].best_position);
  result.best_fitness = particles[g].best_fitness;
  return result;
}

void GridConfig::validate() const {
  if (steps.empty()) throw ValidationError("grid needs at least 1 dimension");
  double total = 1.0;
  for (std::size_t d = 0; d < steps.size(); ++d) {
    if (steps[d] < 1) {
      throw ValidationError("grid dimension " + std::to_string(d) +
                            " needs at least 1 step");
    }
    total *= static_cast<double>(steps[d]);
  }
  if (!(low > 0.0) || !(high > low)) {
    throw ValidationError("scale bounds must satisfy 0 < low < high, got [" +
                          std::to_string(low) + ", " + std::to_string(high) +
                          "]");
  }
  if (threads < 1) throw ValidationError("threads must be positive");
  if (total > static_cast<double>(max_evaluations)) {
    throw ValidationError(
        "grid of about " + std::to_string(static_cast<std::size_t>(total)) +
        " points exceeds the evaluation cap of " +
        std::to_string(max_evaluations));
  }
}

GridResult grid_search(const GridConfig& cfg, const FitnessFn& fitness) {
  cfg.validate();
  const std::size_t dims = cfg.steps.size();

  // Geometric spacing; a 1-step dimension sits at the lower bound.
  std::vector<std::vector<double>> axes(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    const int n = cfg.steps[d];
    axes[d].reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const double t =
          n == 1 ? 0.0
                 : static_cast<double>(k) / static_cast<double>(n - 1);
      axes[d].push_back(cfg.low * std::pow(cfg.high / cfg.low, t));
    }
  }

  std::size_t total = 1;
  for (std::size_t d = 0; d < dims; ++d) {
    total *= static_cast<std::size_t>(cfg.steps[d]);
  }

  std::vector<double> fits(total);
  parallel_for(total, cfg.threads, [&](std::size_t flat) {
    std::size_t rest = flat;
    ScaleVector candidate;
    candidate.values.resize(dims);
    // Row-major decode: the last dimension varies fastest.
    for (std::size_t d = dims; d-- > 0;) {
      const std::size_t n = static_cast<std::size_t>(cfg.steps[d]);
      candidate.values[d] = static_cast<float>(axes[d][rest % n]);
      rest /= n;
    }
    fits[flat] = fitness(candidate);
  });

  // First strictly-better wins: row-major order makes ties resolve to the
  // lexicographically smallest grid point.
  std::size_t best = 0;
  for (std::size_t i = 1; i < total; ++i) {
    if (fits[i] > fits[best]) best = i;
  }

  GridResult result;
  result.evaluations = total;
  result.best_fitness = fits[best];
  result.best.values.resize(dims);
  std::size_t rest = best;
  for (std::size_t d = dims; d-- > 0;) {
    const std::size_t n = static_cast<std::size_t>(cfg.steps[d]);
    result.best.values[d] = static_cast<float>(axes[d][rest % n]);
    rest /= n;
  }
  return result;
}

double percentile_of(std::vector<float> values, double p) {
  if (values.empty()) {
    throw ValidationError("percentile of an empty sample");
  }
  if (p < 0.0 || p > 100.0) {
    throw ValidationError("percentile must lie in [0, 100], got " +
                          std::to_string(p));
  }
  std::sort(values.begin(), values.end());
  const double rank =
      p / 100.0 * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  const std::size_t hi = lo + 1 < values.size() ? lo + 1 : lo;
  const double frac = rank - static_cast<double>(lo);
  return static_cast<double>(values[lo]) +
         frac * (static_cast<double>(values[hi]) -
                 static_cast<double>(values[lo]));
}

NormalizationResult normalize_scales(const NetworkDescription& net,
                                     const std::vector<Tensor>& samples,
                                     double percentile) {
  net.validate();
  if (samples.empty()) {
    throw ValidationError("normalization needs at least one sample");
  }

  const std::size_t depth = net.layer_count();
  std::vector<std::vector<float>> pools(depth + 1);
  for (const Tensor& sample : samples) {
    const auto& raw = sample.values();
    pools[0].insert(pools[0].end(), raw.begin(), raw.end());
    const std::vector<Tensor> acts = ann_forward_layers(net, sample);
    for (std::size_t l = 0; l < depth; ++l) {
      const bool identity_out =
          net.layers[l].activation == Activation::Identity;
      for (float v : acts[l].values()) {
        pools[l + 1].push_back(identity_out && v < 0.0f ? 0.0f : v);
      }
    }
  }

  NormalizationResult result;
  result.lambdas.reserve(depth + 1);
  for (auto& pool : pools) {
    result.lambdas.push_back(percentile_of(std::move(pool), percentile));
  }

  result.scales.values.resize(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    const double above = result.lambdas[l];
    const double here = result.lambdas[l + 1];
    if (!(above > 0.0) || !(here > 0.0) || !std::isfinite(above) ||
        !std::isfinite(here)) {
      result.scales.values[l] = 1.0f;
      result.warnings.push_back(
          "layer " + std::to_string(l) + ": degenerate percentile (" +
          std::to_string(above) + " / " + std::to_string(here) +
          "), falling back to scale 1");
    } else {
      result.scales.values[l] = static_cast<float>(above / here);
    }
  }
  return result;
}

FitnessContext FitnessContext::make(
    std::shared_ptr<const NetworkDescription> net, int episodes,
    std::uint64_t master_seed) {
  if (episodes < 1) {
    throw ValidationError("fitness needs at least one episode");
  }
  FitnessContext ctx;
  ctx.net = std::move(net);
  ctx.seeds.reserve(static_cast<std::size_t>(episodes));
  for (int i = 0; i < episodes; ++i) {
    ctx.seeds.push_back(episode_seed(master_seed, i, false));
  }
  return ctx;
}

double game_fitness(const FitnessContext& ctx, const ScaleVector& scales) {
  if (!ctx.net) throw ValidationError("fitness context needs a network");
  if (ctx.seeds.empty()) {
    throw ValidationError("fitness context needs episode seeds");
  }
  std::vector<double> rewards(ctx.seeds.size());
  parallel_for(ctx.seeds.size(), ctx.threads, [&](std::size_t i) {
    SnnAgent agent(ctx.net, scales, ctx.neuron, ctx.nt, ctx.policy);
    rewards[i] = run_episode(agent, ctx.seeds[i], ctx.spec).reward;
  });
  return mean_of(rewards);
}

std::vector<Tensor> collect_policy_observations(
    std::shared_ptr<const NetworkDescription> net, const EpisodeSpec& spec,
    int episodes, std::size_t max_samples, std::uint64_t master_seed) {
  if (!net) throw ValidationError("observation collection needs a network");
  if (episodes < 1 || max_samples == 0) {
    throw ValidationError("observation collection needs a positive budget");
  }
  std::vector<Tensor> samples;
  AnnAgent agent(net, Policy::greedy());
  for (int ep = 0; ep < episodes && samples.size() < max_samples; ++ep) {
    BreakoutEnv env(spec.env);
    const std::uint64_t seed = episode_seed(master_seed, ep, false);
    env.reset(seed);
    agent.begin_episode(seed);
    FrameStack stack(spec.input_mode);
    stack.push(env.frame());
    while (!env.done() && samples.size() < max_samples) {
      Tensor obs = stack.observation();
      if (spec.occlusion_bar) obs = apply_occlusion(obs, *spec.occlusion_bar);
      const int a = agent.act(obs);
      samples.push_back(std::move(obs));
      env.step(env_action_from_int(a));
      stack.push(env.frame());
    }
  }
  return samples;
}

}  // namespace snnq
