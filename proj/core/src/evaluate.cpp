#include "snnq/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "snnq/errors.hpp"
#include "snnq/parallel.hpp"

namespace snnq {

AnnAgent::AnnAgent(std::shared_ptr<const NetworkDescription> net,
                   Policy policy)
    : net_(std::move(net)), policy_(policy), rng_(make_rng(0)) {
  if (!net_) throw ValidationError("ann agent needs a network");
  net_->validate();
}

void AnnAgent::begin_episode(std::uint64_t episode_seed) {
  rng_ = make_rng(derive_seed(episode_seed, 0, 0x90));
}

int AnnAgent::act(const Tensor& observation) {
  return select_action(ann_forward(*net_, observation), policy_, rng_);
}

SnnAgent::SnnAgent(std::shared_ptr<const NetworkDescription> net,
                   ScaleVector scales, const NeuronConfig& neuron, int nt,
                   Policy policy)
    : snn_(convert(std::move(net), scales, neuron, nt)),
      policy_(policy),
      rng_(make_rng(0)) {}

void SnnAgent::begin_episode(std::uint64_t episode_seed) {
  rng_ = make_rng(derive_seed(episode_seed, 0, 0x90));
  snn_.reseed(derive_seed(episode_seed, 0, 0x57));
}

int SnnAgent::act(const Tensor& observation) {
  return select_action(snn_.forward(observation).q_estimates, policy_, rng_);
}

void RandomAgent::begin_episode(std::uint64_t episode_seed) {
  rng_ = make_rng(derive_seed(episode_seed, 0, 0x90));
}

int RandomAgent::act(const Tensor&) {
  return static_cast<int>(
      uniform_below(rng_, static_cast<std::uint32_t>(n_)));
}

EpisodeResult run_episode(Agent& agent, std::uint64_t env_seed,
                          const EpisodeSpec& spec,
                          std::vector<TraceRow>* trace) {
  BreakoutEnv env(spec.env);
  env.reset(env_seed);
  agent.begin_episode(env_seed);
  FrameStack stack(spec.input_mode);
  stack.push(env.frame());

  EpisodeResult result;
  result.seed = env_seed;
  while (!env.done()) {
    Tensor obs = stack.observation();
    if (spec.occlusion_bar) {
      obs = apply_occlusion(obs, *spec.occlusion_bar);
    }
    const int a = agent.act(obs);
    const StepResult r = env.step(env_action_from_int(a));
    stack.push(env.frame());
    result.reward += r.reward;
    ++result.steps;
    if (trace) {
      trace->push_back(
          TraceRow{result.steps, a, r.reward, env.lives(), env.score()});
    }
  }
  return result;
}

std::uint64_t episode_seed(std::uint64_t master, int index,
                           bool identical_starts) {
  return derive_seed(master, identical_starts
                                 ? 0
                                 : static_cast<std::uint64_t>(index),
                     0xe15);
}

EvalReport EvalReport::build(std::string agent_kind, std::string policy,
                             std::string input_mode,
                             std::vector<EpisodeResult> episodes) {
  EvalReport r;
  r.agent_kind = std::move(agent_kind);
  r.policy = std::move(policy);
  r.input_mode = std::move(input_mode);
  r.episodes = std::move(episodes);
  std::vector<double> rewards;
  rewards.reserve(r.episodes.size());
  for (const EpisodeResult& e : r.episodes) rewards.push_back(e.reward);
  r.mean = mean_of(rewards);
  r.stddev = sample_stddev(rewards);
  return r;
}

EvalReport evaluate(const AgentFactory& factory, const EvalOptions& opts,
                    const std::string& agent_kind, const std::string& policy,
                    std::vector<std::vector<TraceRow>>* traces) {
  if (opts.episodes < 1) {
    throw ValidationError("evaluation needs at least one episode");
  }
  std::vector<EpisodeResult> episodes(
      static_cast<std::size_t>(opts.episodes));
  if (traces) traces->assign(episodes.size(), {});
  parallel_for(episodes.size(), opts.threads, [&](std::size_t i) {
    auto agent = factory();
    const std::uint64_t seed = episode_seed(
        opts.master_seed, static_cast<int>(i), opts.identical_starts);
    episodes[i] = run_episode(*agent, seed, opts.spec,
                              traces ? &(*traces)[i] : nullptr);
  });
  return EvalReport::build(agent_kind, policy, to_string(opts.spec.input_mode),
                           std::move(episodes));
}

std::vector<SweepRow> occlusion_sweep(const AgentFactory& factory,
                                      const EvalOptions& base,
                                      const std::string& agent_kind,
                                      const std::string& policy) {
  std::vector<SweepRow> rows;
  rows.reserve(kOcclusionPositions);
  for (int bar = 0; bar < kOcclusionPositions; ++bar) {
    EvalOptions opts = base;
    opts.spec.occlusion_bar = bar;
    const EvalReport report = evaluate(factory, opts, agent_kind, policy);
    rows.push_back(SweepRow{bar, report.mean, report.stddev});
  }
  return rows;
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

double sample_stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double mu = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

void write_report_json(const EvalReport& report, const std::string& path) {
  nlohmann::json doc;
  doc["agent_kind"] = report.agent_kind;
  doc["policy"] = report.policy;
  doc["input_mode"] = report.input_mode;
  doc["episodes"] = report.episodes.size();
  doc["mean_reward"] = report.mean;
  doc["stddev_reward"] = report.stddev;
  auto out = open_out(path);
  out << doc.dump(1) << '\n';
  if (!out) throw ValidationError("failed writing report to '" + path + "'");
}

void write_episodes_csv(const std::vector<EpisodeResult>& episodes,
                        const std::string& path) {
  auto out = open_out(path);
  out << "episode,seed,reward,steps\n";
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const EpisodeResult& e = episodes[i];
    out << i << ',' << e.seed << ',' << fixed6(e.reward) << ',' << e.steps
        << '\n';
  }
  if (!out) throw ValidationError("failed writing episodes to '" + path + "'");
}

std::vector<EpisodeResult> read_episodes_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open episodes file '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "episode,seed,reward,steps") {
    throw ParseError("episodes file '" + path + "' has an unexpected header");
  }
  std::vector<EpisodeResult> episodes;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    EpisodeResult e;
    unsigned long long idx = 0, seed = 0;
    int consumed = 0;
    if (std::sscanf(line.c_str(), "%llu,%llu,%lf,%d%n", &idx, &seed, &e.reward,
                    &e.steps, &consumed) != 4 ||
        consumed != static_cast<int>(line.size())) {
      throw ParseError("episodes file '" + path + "' line " +
                       std::to_string(line_no) + " is malformed: " + line);
    }
    e.seed = seed;
    episodes.push_back(e);
  }
  return episodes;
}

void write_score_histogram_csv(const std::vector<EpisodeResult>& episodes,
                               const std::string& path) {
  long max_score = 0;
  for (const EpisodeResult& e : episodes) {
    const long s = std::lround(e.reward);
    if (s > max_score) max_score = s;
  }
  std::vector<long> counts(static_cast<std::size_t>(max_score) + 1, 0);
  for (const EpisodeResult& e : episodes) {
    long s = std::lround(e.reward);
    if (s < 0) s = 0;
    ++counts[static_cast<std::size_t>(s)];
  }
  auto out = open_out(path);
  out << "score,count\n";
  for (std::size_t s = 0; s < counts.size(); ++s) {
    out << s << ',' << counts[s] << '\n';
  }
  if (!out) {
    throw ValidationError("failed writing histogram to '" + path + "'");
  }
}

void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::string& path) {
  auto out = open_out(path);
  out << "bar_row,mean_reward,stddev_reward\n";
  for (const SweepRow& r : rows) {
    out << r.bar_row << ',' << fixed6(r.mean) << ',' << fixed6(r.stddev)
        << '\n';
  }
  if (!out) throw ValidationError("failed writing sweep to '" + path + "'");
}

void write_sweep_compare_csv(const std::vector<SweepRow>& ann,
                             const std::vector<SweepRow>& snn,
                             const std::string& path) {
  if (ann.size() != snn.size()) {
    throw ValidationError("sweep sizes differ: " + std::to_string(ann.size()) +
                          " vs " + std::to_string(snn.size()));
  }
  auto out = open_out(path);
  out << "bar_row,ann_mean,ann_stddev,snn_mean,snn_stddev\n";
  for (std::size_t i = 0; i < ann.size(); ++i) {
    if (ann[i].bar_row != snn[i].bar_row) {
      throw ValidationError("sweep bar rows diverge at index " +
                            std::to_string(i));
    }
    out << ann[i].bar_row << ',' << fixed6(ann[i].mean) << ','
        << fixed6(ann[i].stddev) << ',' << fixed6(snn[i].mean) << ','
        << fixed6(snn[i].stddev) << '\n';
  }
  if (!out) throw ValidationError("failed writing sweep to '" + path + "'");
}

void write_trace_csv(const std::vector<std::vector<TraceRow>>& traces,
                     const std::string& path) {
  auto out = open_out(path);
  out << "episode,step,action,reward,lives,score\n";
  for (std::size_t ep = 0; ep < traces.size(); ++ep) {
    for (const TraceRow& row : traces[ep]) {
      out << ep << ',' << row.step << ',' << row.action << ','
          << fixed6(row.reward) << ',' << row.lives << ',' << row.score
          << '\n';
    }
  }
  if (!out) throw ValidationError("failed writing trace to '" + path + "'");
}

}  // namespace snnq
