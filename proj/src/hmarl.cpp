#include "hmarl/hmarl.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "hmarl/attack.hpp"
#include "hmarl/seeding.hpp"
#include "json.hpp"

namespace hmarl {

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::Ddpg: return "ddpg";
    case Strategy::AblationLow: return "ablation-low";
    case Strategy::AblationHigh: return "ablation-high";
    case Strategy::Hmarl: return "hmarl";
  }
  return "hmarl";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "ddpg") return Strategy::Ddpg;
  if (name == "ablation-low") return Strategy::AblationLow;
  if (name == "ablation-high") return Strategy::AblationHigh;
  if (name == "hmarl") return Strategy::Hmarl;
  throw std::invalid_argument("unknown learned strategy '" + name + "'");
}

bool is_learned_strategy(const std::string& name) {
  return name == "ddpg" || name == "ablation-low" || name == "ablation-high" || name == "hmarl";
}

HmarlConfig::HmarlConfig() {
  high.action_head = OutputHead::Softmax;
  high.gamma = 0.90;
  high.actor_lr = 1e-3;
  high.critic_lr = 1e-3;
  low.action_head = OutputHead::Softmax;
  low.gamma = 0.99;
  low.actor_lr = 1e-4;
  low.critic_lr = 1e-3;
}

std::vector<std::string> HmarlConfig::warnings() const {
  std::vector<std::string> out;
  if (!(low.actor_lr < high.actor_lr)) out.push_back("low-level actor learning rate is not below the high-level one");
  if (!(low.gamma > high.gamma)) out.push_back("low-level discount is not above the high-level one");
  return out;
}

void HmarlConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("config: ") + what);
  };
  require(budget >= 0.0 && std::isfinite(budget), "budget must be finite and >= 0");
  require(horizon >= 1, "horizon must be >= 1");
  require(gamma_eval >= 0.0 && gamma_eval <= 1.0, "gamma_eval must be in [0, 1]");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(buffer_capacity >= batch_size, "buffer_capacity must be >= batch_size");
  require(demand_jitter >= 0.0 && demand_jitter < 1.0, "demand_jitter must be in [0, 1)");
  for (const AgentConfig* c : {&high, &low}) {
    require(c->action_head == OutputHead::Softmax || c->action_head == OutputHead::L1Relu,
            "action heads must be softmax or l1");
    require(c->tau > 0.0 && c->tau <= 1.0, "tau must be in (0, 1]");
    require(c->gamma >= 0.0 && c->gamma <= 1.0, "agent discounts must be in [0, 1]");
    require(c->actor_lr > 0.0 && c->critic_lr > 0.0, "learning rates must be > 0");
  }
}

namespace {

bool has_learned_high(Strategy s) { return s != Strategy::AblationLow; }
bool has_learned_low(Strategy s) { return s == Strategy::Hmarl || s == Strategy::AblationLow; }

std::vector<double> scaled(std::vector<double> v, double scale) {
  for (double& x : v) x *= scale;
  return v;
}

std::vector<double> with_budget(const std::vector<double>& obs, double share) {
  std::vector<double> in(obs);
  in.push_back(share);
  return in;
}

std::vector<double> times(std::span<const double> shares, double total) {
  std::vector<double> out(shares.begin(), shares.end());
  for (double& x : out) x *= total;
  return out;
}

}  // namespace

AgentSet make_agents(const RoadNetwork& network, Partition partition, double budget, double nominal_demand,
                     const HmarlConfig& config, std::uint64_t seed) {
  AgentSet set;
  set.strategy = config.strategy;
  set.budget = budget;
  set.scale = nominal_demand > 0.0 ? 1.0 / nominal_demand : 1.0;
  const std::uint64_t init_seed = derive_seed(seed, "net-init");
  if (config.strategy == Strategy::Ddpg) {
    partition = single_component(network);
    const std::size_t E = network.edge_count();
    set.high.emplace(kFeaturesPerEdge * E, 0, E, config.low, derive_seed(init_seed, "ddpg"));
  } else {
    const std::size_t K = partition.K;
    if (has_learned_high(config.strategy)) {
      set.high.emplace(2 * K, 0, K, config.high, derive_seed(init_seed, "high"));
    }
    if (has_learned_low(config.strategy)) {
      std::vector<std::size_t> dims(K);
      for (std::size_t k = 0; k < K; ++k) dims[k] = partition.component_edges(k).size();
      for (std::size_t k = 0; k < K; ++k) {
        if (dims[k] == 0) throw std::invalid_argument("make_agents: component " + std::to_string(k) + " has no edges");
        const std::size_t ctx = maddpg_context_dim(dims, k, 2 * K, config.centralized_critic);
        set.low.emplace_back(kFeaturesPerEdge * dims[k] + 1, ctx, dims[k], config.low,
                             derive_seed(init_seed, "low-" + std::to_string(k)));
      }
    }
  }
  set.partition = std::move(partition);
  return set;
}

Decision act_hmarl(AgentBundle& high, std::span<AgentBundle> low, const Partition& partition,
                   std::span<const double> high_obs, std::span<const std::vector<double>> low_obs, double budget,
                   bool explore) {
  return act_hmarl(high, low, partition, high_obs, low_obs, budget, explore, explore);
}

Decision act_hmarl(AgentBundle& high, std::span<AgentBundle> low, const Partition& partition,
                   std::span<const double> high_obs, std::span<const std::vector<double>> low_obs, double budget,
                   bool explore_high, bool explore_low) {
  if (low.size() != partition.K || low_obs.size() != partition.K) {
    throw std::invalid_argument("act_hmarl: one low-level agent and observation per component required");
  }
  Decision d;
  d.high_obs.assign(high_obs.begin(), high_obs.end());
  d.low_obs.assign(low_obs.begin(), low_obs.end());
  d.high_action = high.act(high_obs, explore_high);
  d.allocation = times(d.high_action, budget);
  std::vector<std::vector<double>> per_component(partition.K);
  for (std::size_t k = 0; k < partition.K; ++k) {
    d.low_action.push_back(low[k].act(with_budget(low_obs[k], d.high_action[k]), explore_low));
    per_component[k] = times(d.low_action[k], d.allocation[k]);
  }
  d.perturbation = assemble_perturbation(partition, per_component);
  return d;
}

Decision decide(AgentSet& agents, const RoadNetwork& network, const TripTable& trips, const SimState& state,
                bool explore) {
  return decide(agents, network, trips, state, explore, explore);
}

Decision decide(AgentSet& agents, const RoadNetwork& network, const TripTable& trips, const SimState& state,
                bool explore_high, bool explore_low) {
  const Partition& part = agents.partition;
  const EdgeFeatures f = compute_edge_features(network, trips, state);
  const double B = agents.budget;

  if (agents.strategy == Strategy::Ddpg) {
    Decision d;
    d.high_obs = scaled(observe_low(f, part, 0), agents.scale);
    d.high_action = agents.high->act(d.high_obs, explore_high);
    d.allocation = {B};
    d.perturbation = Perturbation(times(d.high_action, B));
    return d;
  }

  std::vector<double> high_obs = scaled(observe_high(f, part), agents.scale);
  std::vector<std::vector<double>> low_obs(part.K);
  if (has_learned_low(agents.strategy)) {
    for (std::size_t k = 0; k < part.K; ++k) low_obs[k] = scaled(observe_low(f, part, k), agents.scale);
  }

  if (agents.strategy == Strategy::Hmarl) {
    return act_hmarl(*agents.high, agents.low, part, high_obs, low_obs, B, explore_high, explore_low);
  }

  Decision d;
  d.high_obs = std::move(high_obs);
  d.low_obs = std::move(low_obs);
  if (agents.strategy == Strategy::AblationLow) {
    d.allocation = proportional_allocation(trips, state, part, B);
    d.high_action = times(d.allocation, B > 0.0 ? 1.0 / B : 0.0);
  } else {
    d.high_action = agents.high->act(d.high_obs, explore_high);
    d.allocation = times(d.high_action, B);
  }

  std::vector<std::vector<double>> per_component(part.K);
  for (std::size_t k = 0; k < part.K; ++k) {
    if (agents.strategy == Strategy::AblationLow) {
      d.low_action.push_back(agents.low[k].act(with_budget(d.low_obs[k], d.high_action[k]), explore_low));
      per_component[k] = times(d.low_action[k], d.allocation[k]);
    } else {
      per_component[k] = local_greedy_from_counts(f.route_demand, part, k, d.allocation[k]);
    }
  }
  d.perturbation = assemble_perturbation(part, per_component);
  return d;
}

EpisodeResult evaluate_agents(const AgentSet& agents, const RoadNetwork& network, const TripTable& trips,
                              std::size_t horizon, double gamma) {
  LearnedAttack attack(agents);
  EpisodeOptions options;
  options.horizon = horizon;
  options.gamma = gamma;
  return run_episode(network, trips, attack, options);
}

namespace {

/// Deterministic high-level shares at a state, used as the next-state budget
/// input of the low-level critics.
std::vector<double> deterministic_shares(AgentSet& agents, const TripTable& trips, const SimState& state,
                                         std::span<const double> high_obs) {
  if (agents.strategy == Strategy::AblationLow) {
    const double B = agents.budget;
    return times(proportional_allocation(trips, state, agents.partition, B), B > 0.0 ? 1.0 / B : 0.0);
  }
  return agents.high->act(high_obs, false);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TrainResult train_agents(const RoadNetwork& network, const TripTable& trips, Partition partition,
                         const HmarlConfig& config, std::uint64_t seed,
                         const std::function<void(const TrainLogRow&)>& on_episode) {
  config.validate();
  check_trips(network, trips);
  TrainResult result;
  result.agents = make_agents(network, std::move(partition), config.budget, total_demand(trips), config, seed);
  AgentSet& agents = result.agents;
  if (config.episodes == 0) {
    result.best_eval_objective =
        evaluate_agents(agents, network, trips, config.horizon, config.gamma_eval).discounted_objective;
    return result;
  }

  const bool learn_high = agents.high.has_value();
  const bool learn_low = !agents.low.empty();
  const double scale = agents.scale;
  const std::size_t E = network.edge_count();
  const Partition& part = agents.partition;
  const BudgetMode mode = BudgetMode::Exact;

  std::mt19937_64 demand_rng(derive_seed(seed, "demand"));
  std::uint64_t sampling_seed = derive_seed(seed, "sampling");
  ReplayBuffer<Transition> high_buffer(config.buffer_capacity, derive_seed(sampling_seed, "high"));
  ReplayBuffer<JointTransition> low_buffer(config.buffer_capacity, derive_seed(sampling_seed, "low"));
  {
    const std::uint64_t noise_seed = derive_seed(seed, "noise");
    if (learn_high) {
      const AgentConfig& hc = config.strategy == Strategy::Ddpg ? config.low : config.high;
      agents.high->noise =
          OUNoise(agents.high->action_dim, hc.ou_theta, hc.ou_sigma, derive_seed(noise_seed, "high"));
    }
    for (std::size_t k = 0; k < agents.low.size(); ++k) {
      agents.low[k].noise = OUNoise(agents.low[k].action_dim, config.low.ou_theta, config.low.ou_sigma,
                                    derive_seed(noise_seed, "low-" + std::to_string(k)));
    }
  }
  const bool high_explores = config.strategy == Strategy::Ddpg || config.high_noise;

  auto evaluate_now = [&]() {
    return evaluate_agents(agents, network, trips, config.horizon, config.gamma_eval).discounted_objective;
  };
  AgentSet best = agents;
  if (config.keep_best) {
    result.best_eval_objective = evaluate_now();
    result.best_episode = 0;
  }

  const auto start = std::chrono::steady_clock::now();
  std::bernoulli_distribution coin(0.5);
  std::vector<double> factors(trips.size());

  for (std::size_t episode = 1; episode <= config.episodes; ++episode) {
    for (double& f : factors) f = coin(demand_rng) ? 1.0 + config.demand_jitter : 1.0 - config.demand_jitter;
    const TripTable ep_trips = scale_demand(trips, factors);

    if (learn_high) agents.high->noise.reset();
    for (AgentBundle& b : agents.low) b.noise.reset();

    SimState state = SimState::initial(ep_trips);
    std::vector<double> remaining;
    std::vector<double> high_losses, low_losses;

    for (std::size_t t = 0; t < config.horizon && !state.all_arrived(); ++t) {
      const Decision d = decide(agents, network, ep_trips, state, high_explores, true);
      check_budget(d.perturbation, E, config.budget, mode);

      StepResult next = step(network, ep_trips, state, d.perturbation, &part);
      remaining.push_back(next.metrics.remaining);
      const bool terminal = next.state.all_arrived();

      // Next-state observations for bootstrapping.
      const EdgeFeatures nf = compute_edge_features(network, ep_trips, next.state);
      if (learn_high) {
        Transition h;
        h.obs = d.high_obs;
        h.action = d.high_action;
        h.reward = reward_high(ep_trips, next.state) * scale;
        h.next_obs = config.strategy == Strategy::Ddpg ? scaled(observe_low(nf, part, 0), scale)
                                                       : scaled(observe_high(nf, part), scale);
        h.terminal = terminal;
        high_buffer.push(std::move(h));
      }
      if (learn_low) {
        JointTransition j;
        j.obs = d.low_obs;
        j.budget = d.high_action;
        j.action = d.low_action;
        j.global_state = d.high_obs;
        j.next_global_state = scaled(observe_high(nf, part), scale);
        j.next_budget = deterministic_shares(agents, ep_trips, next.state, j.next_global_state);
        for (std::size_t k = 0; k < part.K; ++k) {
          j.reward.push_back(reward_low(ep_trips, next.state, part, k) * scale);
          j.next_obs.push_back(scaled(observe_low(nf, part, k), scale));
        }
        j.terminal = terminal;
        low_buffer.push(std::move(j));
      }

      if (learn_high && high_buffer.size() >= config.batch_size) {
        const auto batch = high_buffer.sample(config.batch_size);
        high_losses.push_back(update_ddpg(*agents.high, batch).critic_loss);
      }
      if (learn_low && low_buffer.size() >= config.batch_size) {
        const auto batch = low_buffer.sample(config.batch_size);
        for (const UpdateStats& s : update_maddpg(agents.low, batch, config.centralized_critic)) {
          low_losses.push_back(s.critic_loss);
        }
      }
      state = std::move(next.state);
    }

    TrainLogRow row;
    row.episode = episode;
    row.steps = remaining.size();
    for (double r : remaining) row.undiscounted_objective += r;
    row.discounted_objective = discounted_sum(remaining, config.gamma_eval);
    row.critic_loss_high = mean(high_losses);
    row.mean_critic_loss_low = mean(low_losses);
    row.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    row.replay_size = learn_high ? high_buffer.size() : low_buffer.size();
    result.log.push_back(row);
    if (on_episode) on_episode(row);

    if (config.keep_best && (episode % std::max<std::size_t>(config.eval_every, 1) == 0 || episode == config.episodes)) {
      const double value = evaluate_now();
      if (value > result.best_eval_objective) {
        result.best_eval_objective = value;
        result.best_episode = episode;
        best = agents;
      }
    }
  }

  if (config.keep_best) {
    result.agents = std::move(best);
  } else {
    result.best_eval_objective = evaluate_now();
    result.best_episode = config.episodes;
  }
  return result;
}

void write_train_log(std::ostream& out, const std::vector<TrainLogRow>& log) {
  out << "episode,steps,undiscounted_objective,discounted_objective,critic_loss_high,mean_critic_loss_low,"
         "wallclock_s,replay_size\n";
  out.precision(17);
  for (const TrainLogRow& r : log) {
    out << r.episode << ',' << r.steps << ',' << r.undiscounted_objective << ',' << r.discounted_objective << ','
        << r.critic_loss_high << ',' << r.mean_critic_loss_low << ',' << std::fixed << std::setprecision(6)
        << r.wallclock_s << std::defaultfloat << std::setprecision(17) << ',' << r.replay_size << '\n';
  }
}

namespace {

nlohmann::json bundle_meta(const AgentBundle& b) {
  return {{"input_dim", b.input_dim},
          {"context_dim", b.context_dim},
          {"action_dim", b.action_dim},
          {"action_head", to_string(b.action_head)},
          {"gamma", b.gamma},
          {"tau", b.tau}};
}

AgentBundle load_bundle(const std::string& stem, const nlohmann::json& meta) {
  AgentBundle b;
  b.input_dim = meta.at("input_dim").get<std::size_t>();
  b.context_dim = meta.at("context_dim").get<std::size_t>();
  b.action_dim = meta.at("action_dim").get<std::size_t>();
  b.action_head = output_head_from_string(meta.at("action_head").get<std::string>());
  b.gamma = meta.at("gamma").get<double>();
  b.tau = meta.at("tau").get<double>();
  b.actor = MlpNet::load(stem + "_actor");
  b.critic = MlpNet::load(stem + "_critic");
  b.actor_target = b.actor;
  b.critic_target = b.critic;
  b.noise = OUNoise(b.action_dim, 0.15, 0.0, 0);
  if (b.actor.input_size() != b.input_dim || b.actor.output_size() != b.action_dim ||
      b.critic.input_size() != b.input_dim + b.context_dim + b.action_dim) {
    throw std::runtime_error("checkpoint " + stem + ": network shapes disagree with agents.json");
  }
  return b;
}

}  // namespace

std::vector<std::string> save_agents(const AgentSet& agents, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> files;
  nlohmann::json meta;
  meta["strategy"] = to_string(agents.strategy);
  meta["budget"] = agents.budget;
  meta["scale"] = agents.scale;
  meta["components"] = agents.partition.K;
  meta["node_component"] = agents.partition.node_component;
  meta["medoids"] = agents.partition.medoids;
  auto save_one = [&](const AgentBundle& b, const std::string& name) {
    const std::string stem = (fs::path(dir) / name).string();
    b.actor.save(stem + "_actor");
    b.critic.save(stem + "_critic");
    for (const char* part : {"_actor", "_critic"}) {
      files.push_back(stem + part + ".bin");
      files.push_back(stem + part + ".json");
    }
    return bundle_meta(b);
  };
  if (agents.high) {
    const std::string name = agents.strategy == Strategy::Ddpg ? "ddpg" : "high";
    meta["high"] = save_one(*agents.high, name);
    meta["high"]["name"] = name;
  }
  meta["low"] = nlohmann::json::array();
  for (std::size_t k = 0; k < agents.low.size(); ++k) {
    const std::string name = "low_" + std::to_string(k);
    nlohmann::json m = save_one(agents.low[k], name);
    m["name"] = name;
    meta["low"].push_back(m);
  }
  const std::string meta_path = (fs::path(dir) / "agents.json").string();
  std::ofstream out(meta_path);
  if (!out) throw std::runtime_error("cannot write " + meta_path);
  out << meta.dump(2) << '\n';
  files.push_back(meta_path);
  return files;
}

AgentSet load_agents(const std::string& dir, const RoadNetwork& network) {
  namespace fs = std::filesystem;
  const std::string meta_path = (fs::path(dir) / "agents.json").string();
  std::ifstream in(meta_path);
  if (!in) throw std::runtime_error("cannot open " + meta_path);
  const nlohmann::json meta = nlohmann::json::parse(in);
  AgentSet set;
  set.strategy = strategy_from_string(meta.at("strategy").get<std::string>());
  set.budget = meta.at("budget").get<double>();
  set.scale = meta.at("scale").get<double>();
  set.partition = partition_from_nodes(network, meta.at("components").get<std::size_t>(),
                                       meta.at("node_component").get<std::vector<std::size_t>>());
  set.partition.medoids = meta.at("medoids").get<std::vector<NodeId>>();
  if (meta.contains("high")) {
    const auto& h = meta.at("high");
    set.high = load_bundle((fs::path(dir) / h.at("name").get<std::string>()).string(), h);
  }
  for (const auto& l : meta.at("low")) {
    set.low.push_back(load_bundle((fs::path(dir) / l.at("name").get<std::string>()).string(), l));
  }
  return set;
}

}  // namespace hmarl
