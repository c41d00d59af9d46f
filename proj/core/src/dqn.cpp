#include "snnq/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "snnq/errors.hpp"

namespace snnq {

double EpsilonSchedule::at(std::int64_t step) const {
  if (step >= decay_steps) return end;
  if (step <= 0) return start;
  const double t = static_cast<double>(step) / static_cast<double>(decay_steps);
  return start + (end - start) * t;
}

void EpsilonSchedule::validate() const {
  if (start < 0.0 || start > 1.0 || end < 0.0 || end > 1.0) {
    throw ValidationError("epsilon bounds must lie in [0, 1]");
  }
  if (decay_steps < 1) {
    throw ValidationError("epsilon decay_steps must be positive");
  }
}

void TrainerConfig::validate() const {
  if (episodes < 1) throw ValidationError("episodes must be positive");
  if (replay_capacity == 0) {
    throw ValidationError("replay capacity must be positive");
  }
  if (replay_warmup > replay_capacity) {
    throw ValidationError("replay warmup " + std::to_string(replay_warmup) +
                          " exceeds capacity " +
                          std::to_string(replay_capacity));
  }
  if (batch_size < 1) throw ValidationError("batch size must be positive");
  if (static_cast<std::size_t>(batch_size) > replay_capacity) {
    throw ValidationError("batch size exceeds replay capacity");
  }
  if (train_every < 1) throw ValidationError("train_every must be positive");
  if (target_sync < 1) throw ValidationError("target_sync must be positive");
  if (!(learning_rate > 0.0)) {
    throw ValidationError("learning rate must be positive");
  }
  if (gamma < 0.0 || gamma > 1.0) {
    throw ValidationError("gamma must lie in [0, 1], got " +
                          std::to_string(gamma));
  }
  if (checkpoint_every < 0) {
    throw ValidationError("checkpoint_every must be non-negative");
  }
  if (checkpoint_every > 0 && checkpoint_dir.empty()) {
    throw ValidationError("checkpointing needs a checkpoint directory");
  }
  epsilon.validate();
}

DenseQNet::DenseQNet(const NetworkDescription& net) {
  net.validate();
  input_shape_ = net.input_shape;
  n_actions_ = net.n_actions;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LayerSpec& src = net.layers[l];
    if (src.kind != LayerKind::Dense) {
      throw ValidationError("the trainer handles dense-only networks; layer " +
                            std::to_string(l) + " is " + to_string(src.kind));
    }
    Layer layer;
    layer.out_m = src.weights.dim(0);
    layer.in_n = src.weights.dim(1);
    layer.relu = src.activation == Activation::Relu;
    layer.w.resize(src.weights.size());
    for (int j = 0; j < layer.out_m; ++j) {
      for (int i = 0; i < layer.in_n; ++i) {
        layer.w[static_cast<std::size_t>(i) *
                    static_cast<std::size_t>(layer.out_m) +
                static_cast<std::size_t>(j)] = src.weights.at(j, i);
      }
    }
    layer.b = src.bias.values();
    layers_.push_back(std::move(layer));
  }
}

NetworkDescription DenseQNet::to_network() const {
  NetworkDescription net;
  net.input_shape = input_shape_;
  net.n_actions = n_actions_;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& src = layers_[l];
    LayerSpec layer;
    layer.kind = LayerKind::Dense;
    layer.activation =
        l + 1 == layers_.size() ? Activation::Identity : Activation::Relu;
    Tensor w({src.out_m, src.in_n});
    for (int j = 0; j < src.out_m; ++j) {
      for (int i = 0; i < src.in_n; ++i) {
        w.at(j, i) = src.w[static_cast<std::size_t>(i) *
                               static_cast<std::size_t>(src.out_m) +
                           static_cast<std::size_t>(j)];
      }
    }
    layer.weights = std::move(w);
    layer.bias = Tensor({src.out_m}, src.b);
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

void DenseQNet::forward_into(const float* x, std::size_t n,
                             std::vector<std::vector<float>>& acts) const {
  acts.resize(layers_.size());
  const float* in = x;
  std::size_t in_n = n;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    if (in_n != static_cast<std::size_t>(layer.in_n)) {
      throw DimensionError("dense layer " + std::to_string(l) + " expects " +
                           std::to_string(layer.in_n) + " inputs, got " +
                           std::to_string(in_n));
    }
    auto& out = acts[l];
    out.assign(layer.b.begin(), layer.b.end());
    const std::size_t m = static_cast<std::size_t>(layer.out_m);
    for (std::size_t i = 0; i < in_n; ++i) {
      const float xi = in[i];
      if (xi == 0.0f) continue;
      const float* col = layer.w.data() + i * m;
      float* o = out.data();
      for (std::size_t j = 0; j < m; ++j) o[j] += xi * col[j];
    }
    if (layer.relu) {
      for (auto& v : out) {
        if (v < 0.0f) v = 0.0f;
      }
    }
    in = out.data();
    in_n = m;
  }
}

Tensor DenseQNet::forward(const Tensor& x) const {
  std::vector<std::vector<float>> acts;
  forward_into(x.data(), x.size(), acts);
  return Tensor({n_actions_}, std::move(acts.back()));
}

void DenseQNet::Gradients::zero() {
  for (auto& g : w) std::fill(g.begin(), g.end(), 0.0f);
  for (auto& g : b) std::fill(g.begin(), g.end(), 0.0f);
}

DenseQNet::Gradients DenseQNet::make_gradients() const {
  Gradients g;
  for (const Layer& layer : layers_) {
    g.w.emplace_back(layer.w.size(), 0.0f);
    g.b.emplace_back(layer.b.size(), 0.0f);
  }
  return g;
}

double DenseQNet::accumulate_gradient(
    std::span<const TargetSample> batch, Gradients& grads,
    std::vector<std::vector<std::uint32_t>>* touched,
    std::vector<std::vector<char>>* seen) const {
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss_acc = 0.0;

  std::vector<std::vector<float>> acts;
  std::vector<float> delta, delta_prev;
  for (const TargetSample& sample : batch) {
    if (sample.action < 0 || sample.action >= n_actions_) {
      throw ValidationError("sample action " + std::to_string(sample.action) +
                            " out of range");
    }
    forward_into(sample.x->data(), sample.x->size(), acts);
    const float q = acts.back()[static_cast<std::size_t>(sample.action)];
    const double err = static_cast<double>(q) - sample.target;
    loss_acc += err * err * inv_b;

    delta.assign(acts.back().size(), 0.0f);
    delta[static_cast<std::size_t>(sample.action)] =
        static_cast<float>(2.0 * err * inv_b);

    for (std::size_t l = layers_.size(); l-- > 0;) {
      const Layer& layer = layers_[l];
      const std::size_t m = static_cast<std::size_t>(layer.out_m);
      const float* below =
          l == 0 ? sample.x->data() : acts[l - 1].data();
      const std::size_t below_n = static_cast<std::size_t>(layer.in_n);

      float* gb = grads.b[l].data();
      for (std::size_t j = 0; j < m; ++j) gb[j] += delta[j];

      float* gw = grads.w[l].data();
      for (std::size_t i = 0; i < below_n; ++i) {
        const float xi = below[i];
        if (xi == 0.0f) continue;
        if (touched && !(*seen)[l][i]) {
          (*seen)[l][i] = 1;
          (*touched)[l].push_back(static_cast<std::uint32_t>(i));
        }
        float* row = gw + i * m;
        for (std::size_t j = 0; j < m; ++j) row[j] += xi * delta[j];
      }

      if (l == 0) break;
      // Backpropagated error, masked by the relu derivative. Inactive
      // units (activation exactly 0) carry no gradient, so skip them.
      delta_prev.assign(below_n, 0.0f);
      for (std::size_t i = 0; i < below_n; ++i) {
        if (below[i] == 0.0f) continue;
        const float* row = layer.w.data() + i * m;
        float acc = 0.0f;
        for (std::size_t j = 0; j < m; ++j) acc += row[j] * delta[j];
        delta_prev[i] = acc;
      }
      delta.swap(delta_prev);
    }
  }
  return loss_acc;
}

double DenseQNet::loss_and_gradient(std::span<const TargetSample> batch,
                                    Gradients& grads) const {
  if (batch.empty()) {
    throw ValidationError("loss_and_gradient needs a non-empty batch");
  }
  grads.zero();
  return accumulate_gradient(batch, grads, nullptr, nullptr);
}

double DenseQNet::sgd_step(std::span<const TargetSample> batch,
                           double learning_rate) {
  if (batch.empty()) {
    throw ValidationError("sgd_step needs a non-empty batch");
  }
  if (step_grads_.w.empty()) {
    step_grads_ = make_gradients();
    step_touched_.resize(layers_.size());
    step_seen_.clear();
    for (const Layer& layer : layers_) {
      step_seen_.emplace_back(static_cast<std::size_t>(layer.in_n), 0);
    }
  }

  // Clear only what the previous batch dirtied; untouched columns are
  // already exactly zero.
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::size_t m = static_cast<std::size_t>(layers_[l].out_m);
    float* gw = step_grads_.w[l].data();
    for (std::uint32_t i : step_touched_[l]) {
      std::fill_n(gw + static_cast<std::size_t>(i) * m, m, 0.0f);
      step_seen_[l][i] = 0;
    }
    step_touched_[l].clear();
    std::fill(step_grads_.b[l].begin(), step_grads_.b[l].end(), 0.0f);
  }

  const double loss =
      accumulate_gradient(batch, step_grads_, &step_touched_, &step_seen_);

  const float lr = static_cast<float>(learning_rate);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Layer& layer = layers_[l];
    const std::size_t m = static_cast<std::size_t>(layer.out_m);
    const float* gw = step_grads_.w[l].data();
    float* w = layer.w.data();
    for (std::uint32_t i : step_touched_[l]) {
      const std::size_t off = static_cast<std::size_t>(i) * m;
      for (std::size_t j = 0; j < m; ++j) w[off + j] -= lr * gw[off + j];
    }
    const float* gb = step_grads_.b[l].data();
    for (std::size_t k = 0; k < layer.b.size(); ++k) {
      layer.b[k] -= lr * gb[k];
    }
  }
  return loss;
}

double DenseQNet::loss(std::span<const TargetSample> batch) const {
  if (batch.empty()) throw ValidationError("loss needs a non-empty batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double acc = 0.0;
  std::vector<std::vector<float>> acts;
  for (const TargetSample& sample : batch) {
    forward_into(sample.x->data(), sample.x->size(), acts);
    const double err =
        static_cast<double>(acts.back()[static_cast<std::size_t>(
            sample.action)]) -
        sample.target;
    acc += err * err * inv_b;
  }
  return acc;
}

void DenseQNet::apply_sgd(const Gradients& grads, double learning_rate) {
  const float lr = static_cast<float>(learning_rate);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Layer& layer = layers_[l];
    const float* gw = grads.w[l].data();
    for (std::size_t k = 0; k < layer.w.size(); ++k) layer.w[k] -= lr * gw[k];
    const float* gb = grads.b[l].data();
    for (std::size_t k = 0; k < layer.b.size(); ++k) layer.b[k] -= lr * gb[k];
  }
}

double td_target(double reward, const Tensor& s_next, bool done,
                 const DenseQNet& target_net, double gamma) {
  if (done) return reward;
  const Tensor q = target_net.forward(s_next);
  return reward + gamma * static_cast<double>(max_value(q));
}

DqnTrainer::DqnTrainer(NetworkDescription initial, TrainerConfig cfg)
    : cfg_(cfg),
      online_(initial),
      target_(initial),
      replay_(cfg.replay_capacity),
      policy_rng_(make_rng(derive_seed(cfg.seed, 0, 0xac7))),
      sample_rng_(make_rng(derive_seed(cfg.seed, 0, 0xba7c4))) {
  cfg_.validate();
}

void DqnTrainer::sync_target() { target_ = online_; }

int DqnTrainer::act(const Tensor& obs, double epsilon) {
  if (epsilon > 0.0 && uniform01(policy_rng_) < epsilon) {
    return static_cast<int>(
        uniform_below(policy_rng_, static_cast<std::uint32_t>(kNumActions)));
  }
  return argmax(online_.forward(obs));
}

double DqnTrainer::train_step(std::span<const Transition> batch) {
  std::vector<Tensor> xs, nexts;
  xs.reserve(batch.size());
  nexts.reserve(batch.size());
  std::vector<DenseQNet::TargetSample> samples(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const Transition& t = batch[k];
    xs.push_back(t.s.to_tensor());
    nexts.push_back(t.s_next.to_tensor());
    samples[k].x = &xs[k];
    samples[k].action = t.action;
    samples[k].target = static_cast<float>(
        td_target(t.reward, nexts[k], t.done, target_, cfg_.gamma));
  }
  const double loss = online_.sgd_step(samples, cfg_.learning_rate);
  ++updates_;
  if (updates_ % cfg_.target_sync == 0) sync_target();
  return loss;
}

std::vector<EpisodeLog> DqnTrainer::train() {
  BreakoutEnv env;
  FrameStack stack(cfg_.input_mode);
  sync_target();

  // Fill the replay buffer with uniform-random play before learning starts.
  std::uint64_t warm_ep = 0;
  while (replay_.size() < cfg_.replay_warmup) {
    env.reset(derive_seed(cfg_.seed, warm_ep++, 0x3a3));
    stack.clear();
    stack.push(env.frame());
    Tensor obs = stack.observation();
    while (!env.done() && replay_.size() < cfg_.replay_warmup) {
      const int a = static_cast<int>(
          uniform_below(policy_rng_, static_cast<std::uint32_t>(kNumActions)));
      const StepResult r = env.step(env_action_from_int(a));
      stack.push(env.frame());
      Tensor next = stack.observation();
      float reward = static_cast<float>(r.reward);
      if (cfg_.clip_rewards) {
        reward = reward > 1.0f ? 1.0f : (reward < -1.0f ? -1.0f : reward);
      }
      replay_.push(Transition{CompactObs::from_tensor(obs), a, reward,
                              CompactObs::from_tensor(next), r.done});
      obs = std::move(next);
    }
  }

  std::vector<EpisodeLog> log;
  log.reserve(static_cast<std::size_t>(cfg_.episodes));
  std::vector<Transition> batch(static_cast<std::size_t>(cfg_.batch_size));
  for (int ep = 0; ep < cfg_.episodes; ++ep) {
    env.reset(derive_seed(cfg_.seed, static_cast<std::uint64_t>(ep), 0xe9));
    stack.clear();
    stack.push(env.frame());
    Tensor obs = stack.observation();

    EpisodeLog row;
    row.episode = ep;
    double td_acc = 0.0;
    std::int64_t td_n = 0;

    while (!env.done()) {
      const double eps = cfg_.epsilon.at(env_steps_);
      const int a = act(obs, eps);
      const StepResult r = env.step(env_action_from_int(a));
      ++env_steps_;
      stack.push(env.frame());
      Tensor next = stack.observation();
      float reward = static_cast<float>(r.reward);
      if (cfg_.clip_rewards) {
        reward = reward > 1.0f ? 1.0f : (reward < -1.0f ? -1.0f : reward);
      }
      replay_.push(Transition{CompactObs::from_tensor(obs), a, reward,
                              CompactObs::from_tensor(next), r.done});
      obs = std::move(next);
      row.reward += r.reward;
      ++row.steps;

      if (env_steps_ % cfg_.train_every == 0) {
        const auto idx = replay_.sample_indices(
            static_cast<std::size_t>(cfg_.batch_size), sample_rng_);
        for (std::size_t k = 0; k < idx.size(); ++k) {
          batch[k] = replay_.at(idx[k]);
        }
        td_acc += train_step(batch);
        ++td_n;
      }
    }

    row.epsilon = cfg_.epsilon.at(env_steps_);
    row.mean_td_error = td_n > 0 ? td_acc / static_cast<double>(td_n) : 0.0;
    log.push_back(row);

    if (cfg_.checkpoint_every > 0 && (ep + 1) % cfg_.checkpoint_every == 0) {
      save_weights(network(), cfg_.checkpoint_dir + "/checkpoint_ep" +
                                  std::to_string(ep + 1) + ".json");
    }
  }
  return log;
}

void write_training_log_csv(const std::vector<EpisodeLog>& log,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out << "episode,reward,steps,epsilon,mean_td_error\n";
  char buf[160];
  for (const EpisodeLog& row : log) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%d,%.6f,%.8f\n", row.episode,
                  row.reward, row.steps, row.epsilon, row.mean_td_error);
    out << buf;
  }
  if (!out) throw ValidationError("failed writing training log to '" + path +
                                  "'");
}

}  // namespace snnq
