#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "snnq/breakout.hpp"
#include "snnq/network.hpp"
#include "snnq/preprocess.hpp"
#include "snnq/replay.hpp"

namespace snnq {

/// Linear decay from `start` to `end` over `decay_steps` environment steps,
/// clamped afterwards.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  std::int64_t decay_steps = 150000;

  double at(std::int64_t step) const;
  void validate() const;
};

struct TrainerConfig {
  int episodes = 2000;
  std::size_t replay_capacity = 20000;
  std::size_t replay_warmup = 2000;
  int batch_size = 32;
  int train_every = 4;            // environment steps between updates
  std::int64_t target_sync = 2000; // updates between target refreshes
  double learning_rate = 0.001;
  double gamma = 0.99;
  bool clip_rewards = true;       // clip to [-1, 1] before storing
  EpsilonSchedule epsilon;
  InputMode input_mode = InputMode::Grayscale;
  std::uint64_t seed = 1;
  int checkpoint_every = 0;       // episodes; 0 disables
  std::string checkpoint_dir;

  void validate() const;
};

/// Dense-only mirror of a NetworkDescription in update-friendly layout
/// (weights stored input-major). Forward results are bit-identical to
/// ann_forward on the mirrored network: per output, the accumulation order
/// is the same ascending-input dot product, and exactly-zero inputs are
/// skipped on both paths.
class DenseQNet {
 public:
  explicit DenseQNet(const NetworkDescription& net);
  NetworkDescription to_network() const;

  Tensor forward(const Tensor& x) const;
  int n_actions() const { return n_actions_; }
  std::size_t layer_count() const { return layers_.size(); }

  struct Gradients {
    std::vector<std::vector<float>> w;
    std::vector<std::vector<float>> b;
    void zero();
  };
  Gradients make_gradients() const;

  struct TargetSample {
    const Tensor* x = nullptr;
    int action = 0;
    float target = 0.0f;
  };
  /// Mean over the batch of (Q(x, a) - target)^2. Zeroes `grads`, then
  /// accumulates the loss gradient into it.
  double loss_and_gradient(std::span<const TargetSample> batch,
                           Gradients& grads) const;
  double loss(std::span<const TargetSample> batch) const;
  void apply_sgd(const Gradients& grads, double learning_rate);

  /// Fused loss_and_gradient + apply_sgd. Weight columns whose inputs were
  /// zero across the whole batch carry an exactly-zero gradient, so only the
  /// touched columns are cleared, accumulated and updated; the resulting
  /// parameters are bit-identical to the two-call sequence, at a fraction of
  /// the memory traffic on sparse observations.
  double sgd_step(std::span<const TargetSample> batch, double learning_rate);

  // Raw parameter access, used by the finite-difference checks.
  std::span<float> layer_weights(std::size_t l) { return layers_[l].w; }
  std::span<float> layer_biases(std::size_t l) { return layers_[l].b; }
  std::span<const float> layer_weights(std::size_t l) const {
    return layers_[l].w;
  }
  std::span<const float> layer_biases(std::size_t l) const {
    return layers_[l].b;
  }

 private:
  struct Layer {
    int in_n = 0;
    int out_m = 0;
    std::vector<float> w;  // w[i * out_m + j]
    std::vector<float> b;
    bool relu = false;
  };

  void forward_into(const float* x, std::size_t n,
                    std::vector<std::vector<float>>& acts) const;
  double accumulate_gradient(std::span<const TargetSample> batch,
                             Gradients& grads,
                             std::vector<std::vector<std::uint32_t>>* touched,
                             std::vector<std::vector<char>>* seen) const;

  std::vector<Layer> layers_;
  std::vector<int> input_shape_;
  int n_actions_ = 0;

  // Scratch for sgd_step: per-layer gradient buffers plus the list of
  // weight columns touched by the current batch.
  Gradients step_grads_;
  std::vector<std::vector<std::uint32_t>> step_touched_;
  std::vector<std::vector<char>> step_seen_;
};

/// Bellman regression target: reward plus the discounted best target-network
/// Q estimate of the next state, or the bare reward on terminal transitions.
double td_target(double reward, const Tensor& s_next, bool done,
                 const DenseQNet& target_net, double gamma);

struct EpisodeLog {
  int episode = 0;
  double reward = 0.0;
  int steps = 0;
  double epsilon = 0.0;
  double mean_td_error = 0.0;  // mean squared TD error over the updates
};

/// Deep Q-learning on the miniature game: epsilon-greedy acting, uniform
/// replay, a periodically synced target network, plain SGD on the squared
/// TD error.
class DqnTrainer {
 public:
  DqnTrainer(NetworkDescription initial, TrainerConfig cfg);

  /// One SGD update from an explicit batch; returns the batch loss.
  double train_step(std::span<const Transition> batch);

  /// Runs the full training loop; returns one log row per episode.
  std::vector<EpisodeLog> train();

  NetworkDescription network() const { return online_.to_network(); }
  void sync_target();
  const ReplayBuffer& replay() const { return replay_; }
  std::int64_t env_steps() const { return env_steps_; }
  std::int64_t updates() const { return updates_; }

 private:
  int act(const Tensor& obs, double epsilon);

  TrainerConfig cfg_;
  DenseQNet online_;
  DenseQNet target_;
  ReplayBuffer replay_;
  Rng policy_rng_;
  Rng sample_rng_;
  std::int64_t env_steps_ = 0;
  std::int64_t updates_ = 0;
};

void write_training_log_csv(const std::vector<EpisodeLog>& log,
                            const std::string& path);

}  // namespace snnq
