#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "snnq/dqn.hpp"
#include "snnq/errors.hpp"
#include "snnq/evaluate.hpp"
#include "snnq/scale_search.hpp"

namespace {

using namespace snnq;

struct CommonOpts {
  std::string out_dir;
  std::uint64_t seed = 1;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& common) {
  cmd->add_option("--out-dir", common.out_dir, "Directory for artifacts")
      ->required();
  cmd->add_option("--seed", common.seed, "Master seed for this run");
  cmd->add_option("--threads", common.threads,
                  "Worker threads for episode evaluation")
      ->check(CLI::PositiveNumber);
  cmd->set_config("--config", "", "Read options from an INI file");
}

struct NeuronOpts {
  std::string kind = "subif";
  NeuronConfig cfg;
  int nt = 500;
};

void add_neuron(CLI::App* cmd, NeuronOpts& n) {
  cmd->add_option("--neuron", n.kind, "Neuron model")
      ->check(CLI::IsMember({"if", "subif", "lif", "stochastic-lif"}));
  cmd->add_option("--nt", n.nt, "Simulation steps per observation")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--v-thresh", n.cfg.v_thresh, "Spike threshold");
  cmd->add_option("--v-rest", n.cfg.v_rest, "Resting potential");
  cmd->add_option("--v-reset", n.cfg.v_reset, "Reset potential");
  cmd->add_option("--tau", n.cfg.tau, "Membrane time constant");
  cmd->add_option("--tau-sigma", n.cfg.tau_sigma,
                  "Escape-noise time constant (stochastic-lif)");
  cmd->add_option("--beta-sigma", n.cfg.beta_sigma,
                  "Escape-noise sharpness (stochastic-lif)");
  cmd->add_option("--dt", n.cfg.dt, "Integration step");
}

NeuronConfig neuron_config(const NeuronOpts& n) {
  NeuronConfig cfg = n.cfg;
  cfg.kind = neuron_kind_from_string(n.kind);
  cfg.validate();
  return cfg;
}

struct PolicyOpts {
  std::string name = "greedy";
  double epsilon = 0.05;
};

void add_policy(CLI::App* cmd, PolicyOpts& p) {
  cmd->add_option("--policy", p.name, "Action selection")
      ->check(CLI::IsMember({"greedy", "epsilon-greedy"}));
  cmd->add_option("--epsilon", p.epsilon,
                  "Exploration rate for epsilon-greedy");
}

Policy policy_of(const PolicyOpts& p) {
  return p.name == "greedy" ? Policy::greedy()
                            : Policy::epsilon_greedy(p.epsilon);
}

std::filesystem::path ensure_out_dir(const CommonOpts& common) {
  std::filesystem::path dir(common.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

nlohmann::json options_from_ini(const std::string& ini) {
  nlohmann::json opts = nlohmann::json::object();
  std::size_t pos = 0;
  while (pos < ini.size()) {
    std::size_t eol = ini.find('\n', pos);
    if (eol == std::string::npos) eol = ini.size();
    std::string line = ini.substr(pos, eol - pos);
    pos = eol + 1;
    const std::size_t eq = line.find('=');
    if (line.empty() || line[0] == '[' || line[0] == ';' ||
        eq == std::string::npos) {
      continue;
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto trim = [](std::string& s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '"')) {
        s.erase(s.begin());
      }
      while (!s.empty() &&
             (s.back() == ' ' || s.back() == '"' || s.back() == '\r')) {
        s.pop_back();
      }
    };
    trim(key);
    trim(value);
    opts[key] = value;
  }
  return opts;
}

/// Writes manifest.json plus a config.ini that reruns the command:
/// snnq <command> --config <out>/config.ini [--out-dir elsewhere].
/// Only explicitly-given options are recorded; defaults are compiled in.
void write_manifest(CLI::App* cmd, const CommonOpts& common,
                    const std::vector<std::string>& artifacts) {
  const std::filesystem::path dir(common.out_dir);
  const std::string ini = cmd->config_to_str(false, false);
  {
    std::ofstream out(dir / "config.ini", std::ios::binary);
    if (!out) throw ValidationError("cannot write config.ini");
    out << ini;
  }
  nlohmann::json doc;
  doc["command"] = cmd->get_name();
  doc["seed"] = common.seed;
  doc["threads"] = common.threads;
  doc["options"] = options_from_ini(ini);
  doc["artifacts"] = artifacts;
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw ValidationError("cannot write manifest.json");
  out << doc.dump(1) << '\n';
}

ScaleVector parse_scales_list(const std::vector<double>& raw) {
  ScaleVector s;
  for (double v : raw) s.values.push_back(static_cast<float>(v));
  return s;
}

ScaleVector read_scales_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open scales file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("scales file '" + path + "': " + e.what());
  }
  if (!doc.is_object() || !doc.contains("scales")) {
    throw ValidationError("scales file '" + path +
                          "' lacks a 'scales' array");
  }
  ScaleVector s;
  for (const auto& v : doc.at("scales")) {
    s.values.push_back(v.get<float>());
  }
  return s;
}

struct SnnConfigFile {
  NetworkDescription network;
  ScaleVector scales;
  NeuronConfig neuron;
  int nt = 500;
};

void write_snn_config(const SnnConfigFile& snn,
                      const std::filesystem::path& dir,
                      const std::string& name) {
  // The network itself lives in a sibling weights file so both artifacts
  // stay loadable on their own.
  const std::string weights_name = "snn_weights.json";
  save_weights(snn.network, (dir / weights_name).string());
  nlohmann::json doc;
  doc["weights_file"] = weights_name;
  doc["scales"] = snn.scales.values;
  doc["nt"] = snn.nt;
  doc["neuron"] = {
      {"kind", to_string(snn.neuron.kind)},
      {"v_rest", snn.neuron.v_rest},
      {"v_thresh", snn.neuron.v_thresh},
      {"v_reset", snn.neuron.v_reset},
      {"tau", snn.neuron.tau},
      {"tau_sigma", snn.neuron.tau_sigma},
      {"beta_sigma", snn.neuron.beta_sigma},
      {"dt", snn.neuron.dt},
  };
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + name);
  out << doc.dump(1) << '\n';
}

SnnConfigFile read_snn_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open snn config '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("snn config '" + path + "': " + e.what());
  }
  SnnConfigFile snn;
  try {
    const auto weights_name = doc.at("weights_file").get<std::string>();
    const auto base = std::filesystem::path(path).parent_path();
    snn.network = load_weights((base / weights_name).string());
    for (const auto& v : doc.at("scales")) {
      snn.scales.values.push_back(v.get<float>());
    }
    snn.nt = doc.at("nt").get<int>();
    const auto& jn = doc.at("neuron");
    snn.neuron.kind = neuron_kind_from_string(jn.at("kind").get<std::string>());
    snn.neuron.v_rest = jn.at("v_rest").get<float>();
    snn.neuron.v_thresh = jn.at("v_thresh").get<float>();
    snn.neuron.v_reset = jn.at("v_reset").get<float>();
    snn.neuron.tau = jn.at("tau").get<float>();
    snn.neuron.tau_sigma = jn.at("tau_sigma").get<float>();
    snn.neuron.beta_sigma = jn.at("beta_sigma").get<float>();
    snn.neuron.dt = jn.at("dt").get<float>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("snn config '" + path + "': " + e.what());
  }
  snn.neuron.validate();
  snn.scales.validate(snn.network.layer_count());
  return snn;
}

// ---------------------------------------------------------------- train --

struct TrainCli {
  CommonOpts common;
  TrainerConfig cfg;
  std::string input_mode = "grayscale";
  bool paper_scale = false;
  bool no_reward_clip = false;
};

void setup_train(CLI::App* cmd, TrainCli& o) {
  add_common(cmd, o.common);
  cmd->add_option("--episodes", o.cfg.episodes, "Training episodes")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--replay-capacity", o.cfg.replay_capacity,
                  "Replay ring capacity");
  cmd->add_option("--warmup", o.cfg.replay_warmup,
                  "Random-play transitions stored before learning");
  cmd->add_option("--batch-size", o.cfg.batch_size, "SGD batch size")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--train-every", o.cfg.train_every,
                  "Environment steps between updates")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--target-sync", o.cfg.target_sync,
                  "Updates between target-network refreshes")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--lr", o.cfg.learning_rate, "SGD learning rate");
  cmd->add_option("--gamma", o.cfg.gamma, "Discount factor");
  cmd->add_option("--eps-start", o.cfg.epsilon.start, "Initial exploration");
  cmd->add_option("--eps-end", o.cfg.epsilon.end, "Final exploration");
  cmd->add_option("--eps-decay", o.cfg.epsilon.decay_steps,
                  "Steps to reach final exploration");
  cmd->add_option("--input-mode", o.input_mode, "Observation encoding")
      ->check(CLI::IsMember({"binary", "grayscale"}));
  cmd->add_option("--checkpoint-every", o.cfg.checkpoint_every,
                  "Checkpoint period in episodes (0 = off)");
  cmd->add_flag("--paper-scale", o.paper_scale,
                "Full-size run: 30000 episodes, 200000-capacity replay, "
                "50000 warmup, 1M-step epsilon decay");
  cmd->add_flag("--no-reward-clip", o.no_reward_clip,
                "Store raw rewards instead of clipping to [-1, 1]");
}

void run_train(CLI::App* cmd, TrainCli& o) {
  const auto dir = ensure_out_dir(o.common);
  o.cfg.input_mode = input_mode_from_string(o.input_mode);
  o.cfg.seed = o.common.seed;
  o.cfg.clip_rewards = !o.no_reward_clip;
  if (o.paper_scale) {
    if (!cmd->count("--episodes")) o.cfg.episodes = 30000;
    if (!cmd->count("--replay-capacity")) o.cfg.replay_capacity = 200000;
    if (!cmd->count("--warmup")) o.cfg.replay_warmup = 50000;
    if (!cmd->count("--eps-decay")) o.cfg.epsilon.decay_steps = 1000000;
  }
  if (o.cfg.checkpoint_every > 0) {
    o.cfg.checkpoint_dir = (dir / "checkpoints").string();
    std::filesystem::create_directories(o.cfg.checkpoint_dir);
  }
  o.cfg.validate();

  NetworkDescription net =
      make_shallow_preset(kNumActions, derive_seed(o.common.seed, 0, 0x171));
  DqnTrainer trainer(std::move(net), o.cfg);
  const std::vector<EpisodeLog> log = trainer.train();

  save_weights(trainer.network(), (dir / "weights.json").string());
  write_training_log_csv(log, (dir / "training_log.csv").string());
  write_manifest(cmd, o.common, {"weights.json", "training_log.csv"});

  double tail = 0.0;
  const std::size_t window = log.size() < 100 ? log.size() : 100;
  for (std::size_t i = log.size() - window; i < log.size(); ++i) {
    tail += log[i].reward;
  }
  std::printf("trained %zu episodes over %lld env steps; last-%zu mean "
              "reward %.3f\n",
              log.size(), static_cast<long long>(trainer.env_steps()), window,
              tail / static_cast<double>(window));
}

// -------------------------------------------------------------- convert --

struct ConvertCli {
  CommonOpts common;
  std::string weights;
  std::vector<double> scales;
  std::string scales_file;
  NeuronOpts neuron;
};

void setup_convert(CLI::App* cmd, ConvertCli& o) {
  add_common(cmd, o.common);
  cmd->add_option("--weights", o.weights, "Trained network weights")
      ->required();
  cmd->add_option("--scales", o.scales,
                  "Per-layer weight scales, e.g. --scales 2.5 4.0");
  cmd->add_option("--scales-file", o.scales_file,
                  "JSON file with a 'scales' array (optimize output)");
  add_neuron(cmd, o.neuron);
}

void run_convert(CLI::App* cmd, ConvertCli& o) {
  if (o.scales.empty() == o.scales_file.empty()) {
    throw CLI::ValidationError(
        "convert", "give exactly one of --scales or --scales-file");
  }
  const auto dir = ensure_out_dir(o.common);
  SnnConfigFile snn;
  snn.network = load_weights(o.weights);
  snn.scales = o.scales_file.empty() ? parse_scales_list(o.scales)
                                     : read_scales_file(o.scales_file);
  snn.neuron = neuron_config(o.neuron);
  snn.nt = o.neuron.nt;
  // Validates everything, including scale count vs layer count.
  convert(std::make_shared<NetworkDescription>(snn.network), snn.scales,
          snn.neuron, snn.nt);
  write_snn_config(snn, dir, "snn.json");
  write_manifest(cmd, o.common, {"snn.json", "snn_weights.json"});
  std::printf("wrote spiking config for %zu layers (nt=%d, neuron=%s)\n",
              snn.network.layer_count(), snn.nt, to_string(snn.neuron.kind));
}

// ------------------------------------------------------------- optimize --

struct OptimizeCli {
  CommonOpts common;
  std::string weights;
  std::string method = "pso";
  int fitness_episodes = 20;
  PolicyOpts policy;
  std::string input_mode = "grayscale";
  NeuronOpts neuron;
  int iterations = 12;
  int swarm_size = 0;
  double low = 0.1;
  double high = 100.0;
  std::vector<int> grid_steps;
  double percentile = 99.9;
  int norm_episodes = 5;
  std::size_t norm_samples = 2000;
  bool warm_start_normalize = true;
};

void setup_optimize(CLI::App* cmd, OptimizeCli& o) {
  add_common(cmd, o.common);
  cmd->add_option("--weights", o.weights, "Trained network weights")
      ->required();
  cmd->add_option("--method", o.method, "Scale search strategy")
      ->check(CLI::IsMember({"pso", "grid", "normalize"}));
  cmd->add_option("--fitness-episodes", o.fitness_episodes,
                  "Episodes played per fitness evaluation")
      ->check(CLI::PositiveNumber);
  add_policy(cmd, o.policy);
  cmd->add_option("--input-mode", o.input_mode, "Observation encoding")
      ->check(CLI::IsMember({"binary", "grayscale"}));
  add_neuron(cmd, o.neuron);
  cmd->add_option("--iterations", o.iterations, "PSO iterations");
  cmd->add_option("--swarm-size", o.swarm_size,
                  "PSO particles (0 = 10 + floor(2 sqrt(D)))");
  cmd->add_option("--low", o.low, "Lower scale bound");
  cmd->add_option("--high", o.high, "Upper scale bound");
  cmd->add_option("--grid-steps", o.grid_steps,
                  "Grid points per layer, e.g. --grid-steps 6 6");
  cmd->add_option("--percentile", o.percentile,
                  "Activation percentile for method=normalize");
  cmd->add_option("--norm-episodes", o.norm_episodes,
                  "Greedy episodes sampled for method=normalize");
  cmd->add_option("--norm-samples", o.norm_samples,
                  "Observation cap for method=normalize");
  cmd->add_flag("--warm-start-normalize,!--no-warm-start-normalize",
                o.warm_start_normalize,
                "Plant the normalization scales as one initial PSO particle");
}

void run_optimize(CLI::App* cmd, OptimizeCli& o) {
  const auto dir = ensure_out_dir(o.common);
  auto net = std::make_shared<NetworkDescription>(load_weights(o.weights));
  const std::size_t depth = net->layer_count();

  FitnessContext ctx = FitnessContext::make(
      net, o.fitness_episodes, derive_seed(o.common.seed, 0, 0xf17));
  ctx.neuron = neuron_config(o.neuron);
  ctx.nt = o.neuron.nt;
  ctx.policy = policy_of(o.policy);
  ctx.spec.input_mode = input_mode_from_string(o.input_mode);
  ctx.threads = o.common.threads;
  const FitnessFn fitness = [&ctx](const ScaleVector& s) {
    return game_fitness(ctx, s);
  };

  const auto run_normalization = [&] {
    EpisodeSpec spec;
    spec.input_mode = ctx.spec.input_mode;
    const std::vector<Tensor> samples = collect_policy_observations(
        net, spec, o.norm_episodes, o.norm_samples,
        derive_seed(o.common.seed, 0, 0x90a));
    return normalize_scales(*net, samples, o.percentile);
  };

  nlohmann::json doc;
  doc["method"] = o.method;
  ScaleVector best;
  if (o.method == "pso") {
    SwarmConfig swarm;
    swarm.dimensions = static_cast<int>(depth);
    swarm.swarm_size = o.swarm_size;
    swarm.iterations = o.iterations;
    swarm.low = o.low;
    swarm.high = o.high;
    swarm.seed = derive_seed(o.common.seed, 0, 0xb50);
    swarm.threads = 1;  // parallelism lives in the fitness episodes
    if (o.warm_start_normalize) {
      NormalizationResult norm = run_normalization();
      for (auto& v : norm.scales.values) {
        v = std::clamp(v, static_cast<float>(o.low),
                       static_cast<float>(o.high));
      }
      swarm.warm_starts.push_back(norm.scales);
      doc["warm_start"] = norm.scales.values;
    }
    const PsoResult result = pso_optimize(swarm, fitness);
    best = result.best;
    doc["fitness"] = result.best_fitness;
    doc["history"] = result.history;
    doc["swarm_size"] =
        swarm.swarm_size == 0 ? default_swarm_size(swarm.dimensions)
                              : swarm.swarm_size;
    std::printf("pso best fitness %.4f\n", result.best_fitness);
  } else if (o.method == "grid") {
    GridConfig grid;
    grid.steps = o.grid_steps.empty()
                     ? std::vector<int>(depth, 6)
                     : o.grid_steps;
    if (grid.steps.size() != depth) {
      throw CLI::ValidationError(
          "optimize", "--grid-steps needs one entry per layer (" +
                          std::to_string(depth) + ")");
    }
    grid.low = o.low;
    grid.high = o.high;
    grid.threads = 1;
    const GridResult result = grid_search(grid, fitness);
    best = result.best;
    doc["fitness"] = result.best_fitness;
    doc["evaluations"] = result.evaluations;
    std::printf("grid best fitness %.4f over %zu points\n",
                result.best_fitness, result.evaluations);
  } else {
    NormalizationResult result = run_normalization();
    best = result.scales;
    doc["lambdas"] = result.lambdas;
    doc["warnings"] = result.warnings;
    doc["percentile"] = o.percentile;
    doc["fitness"] = fitness(best);
    std::printf("normalization fitness %.4f\n",
                doc["fitness"].get<double>());
  }

  best.validate(depth);
  doc["scales"] = best.values;
  doc["fitness_episodes"] = o.fitness_episodes;
  {
    std::ofstream out(dir / "scales.json", std::ios::binary);
    if (!out) throw ValidationError("cannot write scales.json");
    out << doc.dump(1) << '\n';
  }
  write_manifest(cmd, o.common, {"scales.json"});
  std::printf("scales:");
  for (float v : best.values) std::printf(" %.5f", v);
  std::printf("\n");
}

// ------------------------------------------------------------- evaluate --

struct EvaluateCli {
  CommonOpts common;
  std::string weights;
  std::string snn_config;
  std::string kind = "ann";
  std::vector<double> scales;
  std::string scales_file;
  NeuronOpts neuron;
  PolicyOpts policy;
  std::string input_mode = "grayscale";
  int episodes = 100;
  bool identical_starts = false;
  int occlusion_bar = -1;
  bool trace = false;
};

void add_network_inputs(CLI::App* cmd, EvaluateCli& o, bool allow_both) {
  cmd->add_option("--weights", o.weights, "Trained network weights");
  cmd->add_option("--snn", o.snn_config,
                  "Spiking config from convert (implies --kind snn)");
  auto* kind = cmd->add_option("--kind", o.kind, "Network to run");
  if (allow_both) {
    kind->check(CLI::IsMember({"ann", "snn", "both"}));
  } else {
    kind->check(CLI::IsMember({"ann", "snn"}));
  }
  cmd->add_option("--scales", o.scales, "Per-layer scales for --kind snn");
  cmd->add_option("--scales-file", o.scales_file,
                  "JSON file with a 'scales' array");
  add_neuron(cmd, o.neuron);
}

/// Resolves the agent described by --weights/--snn/--kind/--scales into a
/// factory plus labels. Throws CLI::ValidationError on inconsistent flags.
struct ResolvedAgent {
  AgentFactory factory;
  std::string kind;
  std::shared_ptr<const NetworkDescription> network;
};

ResolvedAgent resolve_snn_agent(const EvaluateCli& o, const Policy& policy,
                                std::shared_ptr<const NetworkDescription> net) {
  ResolvedAgent r;
  r.kind = "snn";
  if (o.scales.empty() == o.scales_file.empty()) {
    throw CLI::ValidationError(
        "evaluate",
        "--kind snn needs exactly one of --scales or --scales-file");
  }
  const ScaleVector scales = o.scales_file.empty()
                                 ? parse_scales_list(o.scales)
                                 : read_scales_file(o.scales_file);
  scales.validate(net->layer_count());
  const NeuronConfig neuron = neuron_config(o.neuron);
  const int nt = o.neuron.nt;
  r.network = net;
  r.factory = [net, scales, neuron, nt, policy] {
    return std::make_unique<SnnAgent>(net, scales, neuron, nt, policy);
  };
  return r;
}

ResolvedAgent resolve_agent(const EvaluateCli& o, const Policy& policy,
                            const std::string& kind) {
  ResolvedAgent r;
  if (!o.snn_config.empty()) {
    if (!o.weights.empty()) {
      throw CLI::ValidationError("evaluate",
                                 "give --weights or --snn, not both");
    }
    if (kind == "ann") {
      throw CLI::ValidationError("evaluate",
                                 "--snn configs always run as --kind snn");
    }
    auto snn = std::make_shared<SnnConfigFile>(read_snn_config(o.snn_config));
    auto net = std::make_shared<NetworkDescription>(snn->network);
    r.network = net;
    r.kind = "snn";
    r.factory = [snn, net, policy] {
      return std::make_unique<SnnAgent>(net, snn->scales, snn->neuron,
                                        snn->nt, policy);
    };
    return r;
  }
  if (o.weights.empty()) {
    throw CLI::ValidationError("evaluate", "--weights or --snn is required");
  }
  auto net = std::make_shared<NetworkDescription>(load_weights(o.weights));
  if (kind == "ann") {
    r.network = net;
    r.kind = "ann";
    r.factory = [net, policy] {
      return std::make_unique<AnnAgent>(net, policy);
    };
    return r;
  }
  return resolve_snn_agent(o, policy, net);
}

void setup_evaluate(CLI::App* cmd, EvaluateCli& o) {
  add_common(cmd, o.common);
  add_network_inputs(cmd, o, false);
  add_policy(cmd, o.policy);
  cmd->add_option("--input-mode", o.input_mode, "Observation encoding")
      ->check(CLI::IsMember({"binary", "grayscale"}));
  cmd->add_option("--episodes", o.episodes, "Episodes to play")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--identical-starts", o.identical_starts,
                "Replay one seed instead of fresh seeds per episode");
  cmd->add_option("--occlusion-bar", o.occlusion_bar,
                  "Top row of a fixed 3-row occlusion (-1 = none)");
  cmd->add_flag("--trace", o.trace, "Write per-step trace.csv");
}

void run_evaluate(CLI::App* cmd, EvaluateCli& o) {
  const auto dir = ensure_out_dir(o.common);
  const Policy policy = policy_of(o.policy);
  const ResolvedAgent agent = resolve_agent(o, policy, o.kind);

  EvalOptions opts;
  opts.episodes = o.episodes;
  opts.master_seed = o.common.seed;
  opts.identical_starts = o.identical_starts;
  opts.threads = o.common.threads;
  opts.spec.input_mode = input_mode_from_string(o.input_mode);
  if (o.occlusion_bar >= 0) opts.spec.occlusion_bar = o.occlusion_bar;

  std::vector<std::vector<TraceRow>> traces;
  const EvalReport report =
      evaluate(agent.factory, opts, agent.kind, policy.name(),
               o.trace ? &traces : nullptr);

  write_report_json(report, (dir / "report.json").string());
  write_episodes_csv(report.episodes, (dir / "episodes.csv").string());
  write_score_histogram_csv(report.episodes,
                            (dir / "histogram.csv").string());
  std::vector<std::string> artifacts = {"report.json", "episodes.csv",
                                        "histogram.csv"};
  if (o.trace) {
    write_trace_csv(traces, (dir / "trace.csv").string());
    artifacts.push_back("trace.csv");
  }
  write_manifest(cmd, o.common, artifacts);
  std::printf("%s %s: mean reward %.4f +/- %.4f over %d episodes\n",
              agent.kind.c_str(), policy.name().c_str(), report.mean,
              report.stddev, o.episodes);
}

// ----------------------------------------------------------- robustness --

struct RobustnessCli {
  EvaluateCli eval;  // shares the agent and policy surface
  int episodes_per_position = 100;
};

void setup_robustness(CLI::App* cmd, RobustnessCli& o) {
  o.eval.kind = "both";
  add_common(cmd, o.eval.common);
  add_network_inputs(cmd, o.eval, true);
  add_policy(cmd, o.eval.policy);
  cmd->add_option("--input-mode", o.eval.input_mode, "Observation encoding")
      ->check(CLI::IsMember({"binary", "grayscale"}));
  cmd->add_option("--episodes-per-position", o.episodes_per_position,
                  "Episodes played at each of the 77 bar positions")
      ->check(CLI::PositiveNumber);
}

void run_robustness(CLI::App* cmd, RobustnessCli& o) {
  const auto dir = ensure_out_dir(o.eval.common);
  const Policy policy = policy_of(o.eval.policy);

  EvalOptions base;
  base.episodes = o.episodes_per_position;
  base.master_seed = o.eval.common.seed;
  base.threads = o.eval.common.threads;
  base.spec.input_mode = input_mode_from_string(o.eval.input_mode);

  std::vector<std::string> artifacts;
  std::vector<SweepRow> ann_rows, snn_rows;
  if (o.eval.kind == "ann" || o.eval.kind == "both") {
    const ResolvedAgent agent = resolve_agent(o.eval, policy, "ann");
    ann_rows = occlusion_sweep(agent.factory, base, agent.kind,
                               policy.name());
    write_sweep_csv(ann_rows, (dir / "sweep_ann.csv").string());
    artifacts.push_back("sweep_ann.csv");
  }
  if (o.eval.kind == "snn" || o.eval.kind == "both") {
    const ResolvedAgent agent = resolve_agent(o.eval, policy, "snn");
    snn_rows = occlusion_sweep(agent.factory, base, agent.kind,
                               policy.name());
    write_sweep_csv(snn_rows, (dir / "sweep_snn.csv").string());
    artifacts.push_back("sweep_snn.csv");
  }
  if (o.eval.kind == "both") {
    write_sweep_compare_csv(ann_rows, snn_rows,
                            (dir / "sweep_compare.csv").string());
    artifacts.push_back("sweep_compare.csv");
  }
  write_manifest(cmd, o.eval.common, artifacts);

  const auto overall = [](const std::vector<SweepRow>& rows) {
    std::vector<double> means;
    means.reserve(rows.size());
    for (const SweepRow& r : rows) means.push_back(r.mean);
    return mean_of(means);
  };
  if (!ann_rows.empty()) {
    std::printf("ann: mean reward over all bar positions %.4f\n",
                overall(ann_rows));
  }
  if (!snn_rows.empty()) {
    std::printf("snn: mean reward over all bar positions %.4f\n",
                overall(snn_rows));
  }
}

// ------------------------------------------------------------- baseline --

struct BaselineCli {
  CommonOpts common;
  std::string agents = "both";
  int episodes = 100;
  std::string input_mode = "grayscale";
};

void setup_baseline(CLI::App* cmd, BaselineCli& o) {
  add_common(cmd, o.common);
  cmd->add_option("--agents", o.agents, "Which baselines to measure")
      ->check(CLI::IsMember({"random", "noop", "both"}));
  cmd->add_option("--episodes", o.episodes, "Episodes per baseline")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--input-mode", o.input_mode, "Observation encoding")
      ->check(CLI::IsMember({"binary", "grayscale"}));
}

void run_baseline(CLI::App* cmd, BaselineCli& o) {
  const auto dir = ensure_out_dir(o.common);
  EvalOptions opts;
  opts.episodes = o.episodes;
  opts.master_seed = o.common.seed;
  opts.threads = o.common.threads;
  opts.spec.input_mode = input_mode_from_string(o.input_mode);

  std::vector<std::string> artifacts;
  const auto measure = [&](const std::string& name,
                           const AgentFactory& factory) {
    const EvalReport report = evaluate(factory, opts, name, name);
    write_report_json(report, (dir / ("report_" + name + ".json")).string());
    write_episodes_csv(report.episodes,
                       (dir / ("episodes_" + name + ".csv")).string());
    artifacts.push_back("report_" + name + ".json");
    artifacts.push_back("episodes_" + name + ".csv");
    std::printf("%s baseline: mean reward %.4f +/- %.4f over %d episodes\n",
                name.c_str(), report.mean, report.stddev, o.episodes);
  };

  if (o.agents == "random" || o.agents == "both") {
    measure("random",
            [] { return std::make_unique<RandomAgent>(kNumActions); });
  }
  if (o.agents == "noop" || o.agents == "both") {
    measure("noop", [] {
      return std::make_unique<ConstantAgent>(
          static_cast<int>(EnvAction::Noop));
    });
  }
  write_manifest(cmd, o.common, artifacts);
}

}  // namespace

/// CLI11 only processes config files attached to the top-level app, so a
/// subcommand's --config would be read but never applied. Expand it into
/// argv tokens before parsing; options given explicitly win over the file.
void expand_config_args(std::vector<std::string>& args) {
  static const std::vector<std::string> kCommands = {
      "train", "convert", "optimize", "evaluate", "robustness", "baseline"};
  if (args.empty() || std::find(kCommands.begin(), kCommands.end(),
                                args.front()) == kCommands.end()) {
    return;
  }
  std::string config_path;
  std::vector<std::string> given;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0) continue;
    const std::size_t eq = a.find('=');
    const std::string name =
        a.substr(2, eq == std::string::npos ? eq : eq - 2);
    given.push_back(name);
    if (name == "config") {
      if (eq != std::string::npos) {
        config_path = a.substr(eq + 1);
      } else if (i + 1 < args.size()) {
        config_path = args[i + 1];
      }
    }
  }
  if (config_path.empty()) return;
  for (const CLI::ConfigItem& item :
       CLI::ConfigTOML{}.from_file(config_path)) {
    if (!item.parents.empty() || item.name == "config") continue;
    if (std::find(given.begin(), given.end(), item.name) != given.end()) {
      continue;
    }
    if (item.inputs.empty()) args.push_back("--" + item.name);
    for (const std::string& input : item.inputs) {
      args.push_back("--" + item.name + "=" + input);
    }
  }
}

int main(int argc, char** argv) {
  CLI::App app{
      "Spiking Q-network workbench for the miniature Breakout game"};
  app.require_subcommand(1);

  TrainCli train_cli;
  CLI::App* train_cmd =
      app.add_subcommand("train", "Train the shallow Q-network with DQN");
  setup_train(train_cmd, train_cli);

  ConvertCli convert_cli;
  CLI::App* convert_cmd = app.add_subcommand(
      "convert", "Turn trained weights into a spiking network config");
  setup_convert(convert_cmd, convert_cli);

  OptimizeCli optimize_cli;
  CLI::App* optimize_cmd = app.add_subcommand(
      "optimize", "Search per-layer weight scales for the spiking network");
  setup_optimize(optimize_cmd, optimize_cli);

  EvaluateCli evaluate_cli;
  CLI::App* evaluate_cmd =
      app.add_subcommand("evaluate", "Play episodes and report scores");
  setup_evaluate(evaluate_cmd, evaluate_cli);

  RobustnessCli robustness_cli;
  CLI::App* robustness_cmd = app.add_subcommand(
      "robustness", "Sweep a 3-row occlusion bar over all 77 positions");
  setup_robustness(robustness_cmd, robustness_cli);

  BaselineCli baseline_cli;
  CLI::App* baseline_cmd = app.add_subcommand(
      "baseline", "Measure random and noop reference scores");
  setup_baseline(baseline_cmd, baseline_cli);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    expand_config_args(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
    if (train_cmd->parsed()) run_train(train_cmd, train_cli);
    if (convert_cmd->parsed()) run_convert(convert_cmd, convert_cli);
    if (optimize_cmd->parsed()) run_optimize(optimize_cmd, optimize_cli);
    if (evaluate_cmd->parsed()) run_evaluate(evaluate_cmd, evaluate_cli);
    if (robustness_cmd->parsed()) run_robustness(robustness_cmd, robustness_cli);
    if (baseline_cmd->parsed()) run_baseline(baseline_cmd, baseline_cli);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
