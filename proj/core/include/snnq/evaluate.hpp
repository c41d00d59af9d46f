#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "snnq/breakout.hpp"
#include "snnq/preprocess.hpp"
#include "snnq/spiking.hpp"

namespace snnq {

/// Maps observations to actions. Stateful agents (exploration noise,
/// stochastic neurons) draw from streams reset by begin_episode.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual void begin_episode(std::uint64_t episode_seed) {}
  virtual int act(const Tensor& observation) = 0;
};

class AnnAgent : public Agent {
 public:
  AnnAgent(std::shared_ptr<const NetworkDescription> net, Policy policy);
  void begin_episode(std::uint64_t episode_seed) override;
  int act(const Tensor& observation) override;

 private:
  std::shared_ptr<const NetworkDescription> net_;
  Policy policy_;
  Rng rng_;
};

class SnnAgent : public Agent {
 public:
  SnnAgent(std::shared_ptr<const NetworkDescription> net, ScaleVector scales,
           const NeuronConfig& neuron, int nt, Policy policy);
  void begin_episode(std::uint64_t episode_seed) override;
  int act(const Tensor& observation) override;
  SpikingNetwork& spiking() { return snn_; }

 private:
  SpikingNetwork snn_;
  Policy policy_;
  Rng rng_;
};

/// Plays one fixed action forever.
class ConstantAgent : public Agent {
 public:
  explicit ConstantAgent(int action) : action_(action) {}
  int act(const Tensor&) override { return action_; }

 private:
  int action_;
};

class RandomAgent : public Agent {
 public:
  explicit RandomAgent(int n_actions) : n_(n_actions) {}
  void begin_episode(std::uint64_t episode_seed) override;
  int act(const Tensor&) override;

 private:
  int n_;
  Rng rng_;
};

/// Builds a fresh agent for one episode.
using AgentFactory = std::function<std::unique_ptr<Agent>()>;

struct EpisodeSpec {
  InputMode input_mode = InputMode::Grayscale;
  /// Top row of a 3-row horizontal occlusion over the observation, if any.
  std::optional<int> occlusion_bar;
  EnvConfig env;
};

struct EpisodeResult {
  std::uint64_t seed = 0;
  double reward = 0.0;
  int steps = 0;
};

struct TraceRow {
  int step = 0;
  int action = 0;
  double reward = 0.0;
  int lives = 0;
  int score = 0;
};

EpisodeResult run_episode(Agent& agent, std::uint64_t env_seed,
                          const EpisodeSpec& spec,
                          std::vector<TraceRow>* trace = nullptr);

struct EvalOptions {
  int episodes = 100;
  std::uint64_t master_seed = 1;
  /// All episodes replay the same seed (an identical start) instead of the
  /// derived per-episode seeds.
  bool identical_starts = false;
  int threads = 1;
  EpisodeSpec spec;
};

struct EvalReport {
  std::string agent_kind;
  std::string policy;
  std::string input_mode;
  std::vector<EpisodeResult> episodes;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation

  static EvalReport build(std::string agent_kind, std::string policy,
                          std::string input_mode,
                          std::vector<EpisodeResult> episodes);
};

/// Plays opts.episodes episodes with per-episode agents from the factory.
/// Episode seeds derive from the master seed, so two evaluations with the
/// same options play the same set of game seeds.
EvalReport evaluate(const AgentFactory& factory, const EvalOptions& opts,
                    const std::string& agent_kind, const std::string& policy,
                    std::vector<std::vector<TraceRow>>* traces = nullptr);

/// Seed of episode `index` under `master`; shared by every evaluation so
/// different agents face identical games.
std::uint64_t episode_seed(std::uint64_t master, int index,
                           bool identical_starts);

struct SweepRow {
  int bar_row = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

/// Mean score per occlusion bar position (all kOcclusionPositions of them),
/// same episode seeds at every position.
std::vector<SweepRow> occlusion_sweep(const AgentFactory& factory,
                                      const EvalOptions& base,
                                      const std::string& agent_kind,
                                      const std::string& policy);

double mean_of(const std::vector<double>& xs);
double sample_stddev(const std::vector<double>& xs);

void write_report_json(const EvalReport& report, const std::string& path);
void write_episodes_csv(const std::vector<EpisodeResult>& episodes,
                        const std::string& path);
std::vector<EpisodeResult> read_episodes_csv(const std::string& path);
void write_score_histogram_csv(const std::vector<EpisodeResult>& episodes,
                               const std::string& path);
void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::string& path);
void write_sweep_compare_csv(const std::vector<SweepRow>& ann,
                             const std::vector<SweepRow>& snn,
                             const std::string& path);
void write_trace_csv(const std::vector<std::vector<TraceRow>>& traces,
                     const std::string& path);

}  // namespace snnq
