#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "snnq/evaluate.hpp"
#include "snnq/spiking.hpp"

namespace snnq {

/// Fitness of a candidate scale vector; larger is better.
using FitnessFn = std::function<double(const ScaleVector&)>;

int default_swarm_size(int dimensions);  // 10 + round(2 * sqrt(D)); 13 at D=2

struct Particle {
  std::vector<double> position;  // log-scale coordinates
  std::vector<double> velocity;
  std::vector<double> best_position;
  double fitness = 0.0;
  double best_fitness = 0.0;
};

/// Global-best PSO over log-scale coordinates in [low, high]^D.
struct SwarmConfig {
  int dimensions = 2;
  int swarm_size = 0;  // 0 picks default_swarm_size(dimensions)
  int iterations = 30;
  double low = 0.1;
  double high = 100.0;
  double inertia = 0.7298;
  double cognitive = 1.49618;
  double social = 1.49618;
  std::uint64_t seed = 1;
  /// Fitness calls within one iteration may run in parallel; results do
  /// not depend on the thread count.
  int threads = 1;
  /// Optional scale vectors planted as initial particle positions.
  std::vector<ScaleVector> warm_starts;

  void validate() const;
};

using SwarmObserver =
    std::function<void(int iteration, const std::vector<Particle>&)>;

struct PsoResult {
  ScaleVector best;
  double best_fitness = 0.0;
  /// Global best after the initial evaluation and after each iteration
  /// (iterations + 1 entries, never decreasing).
  std::vector<double> history;
};

PsoResult pso_optimize(const SwarmConfig& cfg, const FitnessFn& fitness,
                       const SwarmObserver& observer = nullptr);

/// Exhaustive geometric grid over [low, high]^D, steps[d] points along
/// dimension d. Ties break toward the lexicographically smallest point.
struct GridConfig {
  std::vector<int> steps;
  double low = 0.1;
  double high = 100.0;
  std::size_t max_evaluations = 200000;
  int threads = 1;

  void validate() const;
};

struct GridResult {
  ScaleVector best;
  double best_fitness = 0.0;
  std::size_t evaluations = 0;
};

GridResult grid_search(const GridConfig& cfg, const FitnessFn& fitness);

/// p-th percentile (0..100) with linear interpolation between order
/// statistics.
double percentile_of(std::vector<float> values, double p);

/// Activation-statistics scales: scale_l = lambda_{l-1} / lambda_l, where
/// lambda_l is the p-th percentile of layer l's post-activation values over
/// the samples (positive part for the identity output layer) and lambda of
/// the input is taken over the raw sample values. Degenerate percentiles
/// fall back to scale 1 with a warning.
struct NormalizationResult {
  ScaleVector scales;
  std::vector<double> lambdas;  // input first, then one per layer
  std::vector<std::string> warnings;
};

NormalizationResult normalize_scales(const NetworkDescription& net,
                                     const std::vector<Tensor>& samples,
                                     double percentile = 99.9);

/// Game-score fitness: converts the network with the candidate scales and
/// plays a fixed list of episode seeds; fitness is the mean episode reward.
/// The same seeds are replayed for every candidate.
struct FitnessContext {
  std::shared_ptr<const NetworkDescription> net;
  NeuronConfig neuron;
  int nt = 500;
  Policy policy;
  EpisodeSpec spec;
  std::vector<std::uint64_t> seeds;
  int threads = 1;

  static FitnessContext make(std::shared_ptr<const NetworkDescription> net,
                             int episodes, std::uint64_t master_seed);
};

double game_fitness(const FitnessContext& ctx, const ScaleVector& scales);

/// Observations visited by the greedy ANN policy, for normalize_scales.
std::vector<Tensor> collect_policy_observations(
    std::shared_ptr<const NetworkDescription> net, const EpisodeSpec& spec,
    int episodes, std::size_t max_samples, std::uint64_t master_seed);

}  // namespace snnq
