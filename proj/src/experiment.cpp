#include "hmarl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "hmarl/attack.hpp"
#include "hmarl/seeding.hpp"

namespace hmarl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json agent_to_json(const AgentConfig& c) {
  return {{"actor_hidden", c.actor_hidden}, {"critic_hidden", c.critic_hidden},
          {"action_head", to_string(c.action_head)}, {"critic_head", to_string(c.critic_head)},
          {"actor_lr", c.actor_lr}, {"critic_lr", c.critic_lr}, {"gamma", c.gamma}, {"tau", c.tau},
          {"ou_theta", c.ou_theta}, {"ou_sigma", c.ou_sigma}, {"actor_final_range", c.actor_final_range}};
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw UsageError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      throw UsageError(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

AgentConfig agent_from_json(const json& j, AgentConfig c, const std::string& where) {
  reject_unknown(j,
                 {"actor_hidden", "critic_hidden", "action_head", "critic_head", "actor_lr", "critic_lr", "gamma",
                  "tau", "ou_theta", "ou_sigma", "actor_final_range"},
                 where);
  read(j, "actor_hidden", c.actor_hidden);
  read(j, "critic_hidden", c.critic_hidden);
  if (j.contains("action_head")) c.action_head = output_head_from_string(j.at("action_head").get<std::string>());
  if (j.contains("critic_head")) c.critic_head = output_head_from_string(j.at("critic_head").get<std::string>());
  read(j, "actor_lr", c.actor_lr);
  read(j, "critic_lr", c.critic_lr);
  read(j, "gamma", c.gamma);
  read(j, "tau", c.tau);
  read(j, "ou_theta", c.ou_theta);
  read(j, "ou_sigma", c.ou_sigma);
  read(j, "actor_final_range", c.actor_final_range);
  return c;
}

void write_manifest(const std::string& command, const ExperimentConfig& config,
                    const std::vector<std::string>& artifacts) {
  json files = json::object();
  for (const std::string& path : artifacts) {
    files[fs::relative(path, config.out_dir).generic_string()] = file_digest(path);
  }
  const json manifest = {{"command", command}, {"seed", config.seed}, {"config", config.to_json()},
                         {"artifacts", files}};
  std::ofstream out(fs::path(config.out_dir) / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + config.out_dir);
  out << manifest.dump(2) << '\n';
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

LocalGreedyNorm greedy_norm(const ExperimentConfig& config) {
  return config.local_greedy_norm == "global" ? LocalGreedyNorm::Global : LocalGreedyNorm::Component;
}

std::string budget_tag(double budget) { return "B" + format_number(budget); }

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  reject_unknown(j,
                 {"net", "trips", "budget", "components", "seed", "horizon", "gamma_eval", "attacker", "out",
                  "checkpoint", "budgets", "strategies", "workers", "local_greedy_norm", "rl"},
                 "config");
  ExperimentConfig c;
  read(j, "net", c.net_path);
  read(j, "trips", c.trips_path);
  read(j, "budget", c.budget);
  read(j, "components", c.components);
  read(j, "seed", c.seed);
  read(j, "horizon", c.horizon);
  read(j, "gamma_eval", c.gamma_eval);
  read(j, "attacker", c.attacker);
  read(j, "out", c.out_dir);
  read(j, "checkpoint", c.checkpoint);
  read(j, "budgets", c.budgets);
  read(j, "strategies", c.strategies);
  read(j, "workers", c.workers);
  read(j, "local_greedy_norm", c.local_greedy_norm);
  if (j.contains("rl")) {
    const json& r = j.at("rl");
    reject_unknown(r,
                   {"episodes", "buffer_capacity", "batch_size", "demand_jitter", "high_noise", "centralized_critic",
                    "eval_every", "keep_best", "high", "low"},
                   "config.rl");
    read(r, "episodes", c.rl.episodes);
    read(r, "buffer_capacity", c.rl.buffer_capacity);
    read(r, "batch_size", c.rl.batch_size);
    read(r, "demand_jitter", c.rl.demand_jitter);
    read(r, "high_noise", c.rl.high_noise);
    read(r, "centralized_critic", c.rl.centralized_critic);
    read(r, "eval_every", c.rl.eval_every);
    read(r, "keep_best", c.rl.keep_best);
    if (r.contains("high")) c.rl.high = agent_from_json(r.at("high"), c.rl.high, "config.rl.high");
    if (r.contains("low")) c.rl.low = agent_from_json(r.at("low"), c.rl.low, "config.rl.low");
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
}

json ExperimentConfig::to_json() const {
  return {{"net", net_path},
          {"trips", trips_path},
          {"budget", budget},
          {"components", components},
          {"seed", seed},
          {"horizon", horizon},
          {"gamma_eval", gamma_eval},
          {"attacker", attacker},
          {"out", out_dir},
          {"checkpoint", checkpoint},
          {"budgets", budgets},
          {"strategies", strategies.empty() ? all_strategies() : strategies},
          {"workers", workers},
          {"local_greedy_norm", local_greedy_norm},
          {"rl",
           {{"episodes", rl.episodes},
            {"buffer_capacity", rl.buffer_capacity},
            {"batch_size", rl.batch_size},
            {"demand_jitter", rl.demand_jitter},
            {"high_noise", rl.high_noise},
            {"centralized_critic", rl.centralized_critic},
            {"eval_every", rl.eval_every},
            {"keep_best", rl.keep_best},
            {"high", agent_to_json(rl.high)},
            {"low", agent_to_json(rl.low)}}}};
}

void ExperimentConfig::validate(bool need_files) const {
  if (!(budget >= 0.0)) throw UsageError("budget must be >= 0");
  if (components < 1) throw UsageError("components must be >= 1");
  if (horizon < 1) throw UsageError("horizon must be >= 1");
  if (!is_known_attacker(attacker)) throw UsageError("unknown attacker '" + attacker + "'");
  for (double b : budgets) {
    if (!(b >= 0.0)) throw UsageError("budgets must be >= 0");
  }
  for (const std::string& s : strategies) {
    if (!is_known_attacker(s)) throw UsageError("unknown strategy '" + s + "'");
  }
  if (local_greedy_norm != "component" && local_greedy_norm != "global") {
    throw UsageError("local_greedy_norm must be 'component' or 'global'");
  }
  if (need_files) {
    if (net_path.empty() || !fs::exists(net_path)) throw UsageError("network file not found: '" + net_path + "'");
    if (trips_path.empty() || !fs::exists(trips_path)) throw UsageError("trips file not found: '" + trips_path + "'");
  }
  try {
    rl_config(budget).validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

HmarlConfig ExperimentConfig::rl_config(double budget_override) const {
  HmarlConfig c = rl;
  c.budget = budget_override;
  c.horizon = horizon;
  c.gamma_eval = gamma_eval;
  if (is_learned_strategy(attacker)) c.strategy = strategy_from_string(attacker);
  return c;
}

const std::vector<std::string>& all_strategies() {
  static const std::vector<std::string> names{"none",         "greedy",        "ddpg", "decomposed-greedy",
                                              "ablation-low", "ablation-high", "hmarl"};
  return names;
}

bool is_known_attacker(const std::string& name) {
  const auto& all = all_strategies();
  return std::find(all.begin(), all.end(), name) != all.end();
}

Environment load_environment(const ExperimentConfig& config) {
  Environment env{load_tntp_net(config.net_path), load_tntp_trips(config.trips_path)};
  check_trips(env.network, env.trips);
  return env;
}

Partition make_partition(const RoadNetwork& network, const ExperimentConfig& config) {
  if (config.components == 1) return single_component(network);
  return kmeans_cluster(network, config.components, derive_seed(config.seed, "clustering"));
}

double run_strategy(const Environment& env, const Partition& partition, const ExperimentConfig& config,
                    const std::string& strategy, double budget) {
  if (is_learned_strategy(strategy)) {
    HmarlConfig rl = config.rl_config(budget);
    rl.strategy = strategy_from_string(strategy);
    return train_agents(env.network, env.trips, partition, rl, config.seed).best_eval_objective;
  }
  auto attack = make_heuristic_attack(strategy, env.network, partition, budget, greedy_norm(config));
  EpisodeOptions options;
  options.horizon = config.horizon;
  options.gamma = config.gamma_eval;
  return run_episode(env.network, env.trips, *attack, options).discounted_objective;
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "budget,strategy,objective,seed\n";
  for (const AblationRow& r : rows) {
    out << format_number(r.budget) << ',' << r.strategy << ',' << format_number(r.objective) << ',' << r.seed
        << '\n';
  }
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(buf.str());
  return hex.str();
}

CommandOutput cmd_simulate(const ExperimentConfig& config) {
  config.validate();
  if (is_learned_strategy(config.attacker)) {
    throw UsageError("simulate runs heuristic attackers only; use train/evaluate for '" + config.attacker + "'");
  }
  const Environment env = load_environment(config);
  const Partition partition = config.attacker == "decomposed-greedy" ? make_partition(env.network, config)
                                                                     : single_component(env.network);
  auto attack = make_heuristic_attack(config.attacker, env.network, partition, config.budget, greedy_norm(config));
  EpisodeOptions options;
  options.horizon = config.horizon;
  options.gamma = config.gamma_eval;
  const EpisodeResult result = run_episode(env.network, env.trips, *attack, options);

  fs::create_directories(config.out_dir);
  const fs::path csv =
      fs::path(config.out_dir) / ("steps_" + config.attacker + "_" + budget_tag(attack->budget()) + ".csv");
  {
    std::ofstream out = open_out(csv);
    write_episode_csv(out, result);
  }
  CommandOutput output{{csv.string()}, ""};
  std::ostringstream s;
  s << "attacker=" << config.attacker << " budget=" << format_number(attack->budget())
    << " objective=" << format_number(result.discounted_objective) << " steps=" << result.steps_run
    << " all_arrived=" << (result.all_arrived ? "true" : "false");
  output.summary = s.str();
  write_manifest("simulate", config, output.artifacts);
  return output;
}

CommandOutput cmd_train(const ExperimentConfig& config) {
  config.validate();
  if (!is_learned_strategy(config.attacker)) {
    throw UsageError("train needs a learned attacker (ddpg, ablation-low, ablation-high, hmarl), got '" +
                     config.attacker + "'");
  }
  const Environment env = load_environment(config);
  const Partition partition = make_partition(env.network, config);
  const HmarlConfig rl = config.rl_config(config.budget);
  const TrainResult result = train_agents(env.network, env.trips, partition, rl, config.seed);

  fs::create_directories(config.out_dir);
  CommandOutput output;
  output.artifacts = save_agents(result.agents, (fs::path(config.out_dir) / "checkpoints").string());
  const fs::path log = fs::path(config.out_dir) / "train_log.csv";
  {
    std::ofstream out = open_out(log);
    write_train_log(out, result.log);
  }
  output.artifacts.push_back(log.string());
  std::ostringstream s;
  for (const std::string& w : rl.warnings()) s << "warning: " << w << '\n';
  s << "attacker=" << config.attacker << " episodes=" << result.log.size()
    << " eval_objective=" << format_number(result.best_eval_objective) << " best_episode=" << result.best_episode;
  output.summary = s.str();
  write_manifest("train", config, output.artifacts);
  return output;
}

CommandOutput cmd_evaluate(const ExperimentConfig& config) {
  if (!is_learned_strategy(config.attacker)) return cmd_simulate(config);
  config.validate();
  const Environment env = load_environment(config);
  const std::string dir =
      config.checkpoint.empty() ? (fs::path(config.out_dir) / "checkpoints").string() : config.checkpoint;
  const AgentSet agents = load_agents(dir, env.network);
  const EpisodeResult result = evaluate_agents(agents, env.network, env.trips, config.horizon, config.gamma_eval);

  fs::create_directories(config.out_dir);
  const fs::path csv =
      fs::path(config.out_dir) / ("steps_" + to_string(agents.strategy) + "_" + budget_tag(agents.budget) + ".csv");
  {
    std::ofstream out = open_out(csv);
    write_episode_csv(out, result);
  }
  CommandOutput output{{csv.string()}, ""};
  std::ostringstream s;
  s << "attacker=" << to_string(agents.strategy) << " budget=" << format_number(agents.budget)
    << " objective=" << format_number(result.discounted_objective) << " steps=" << result.steps_run
    << " all_arrived=" << (result.all_arrived ? "true" : "false");
  output.summary = s.str();
  write_manifest("evaluate", config, output.artifacts);
  return output;
}

CommandOutput cmd_ablate(const ExperimentConfig& config) {
  config.validate();
  const Environment env = load_environment(config);
  const Partition partition = make_partition(env.network, config);
  const std::vector<std::string>& strategies = config.strategies.empty() ? all_strategies() : config.strategies;

  std::vector<AblationRow> rows;
  for (double b : config.budgets) {
    for (const std::string& s : strategies) rows.push_back({b, s, 0.0, config.seed});
  }
  std::vector<std::exception_ptr> errors(rows.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      try {
        rows[i].objective = run_strategy(env, partition, config, rows[i].strategy, rows[i].budget);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::size_t threads = config.workers == 0 ? std::thread::hardware_concurrency() : config.workers;
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(rows.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  fs::create_directories(config.out_dir);
  const fs::path csv = fs::path(config.out_dir) / "ablation.csv";
  {
    std::ofstream out = open_out(csv);
    write_ablation_csv(out, rows);
  }
  CommandOutput output{{csv.string()}, ""};
  std::ostringstream s;
  write_ablation_csv(s, rows);
  output.summary = s.str();
  write_manifest("ablate", config, output.artifacts);
  return output;
}

CommandOutput cmd_decompose(const ExperimentConfig& config) {
  config.validate();
  const Environment env = load_environment(config);
  const ClusteringTrace trace = config.components == 1
                                    ? ClusteringTrace{single_component(env.network), {}, 0}
                                    : kmeans_cluster_traced(env.network, config.components,
                                                            derive_seed(config.seed, "clustering"));
  fs::create_directories(config.out_dir);
  const fs::path map = fs::path(config.out_dir) / "partition.tsv";
  {
    std::ofstream out = open_out(map);
    write_partition(out, trace.partition);
  }
  CommandOutput output{{map.string()}, ""};
  std::ostringstream s;
  s << "components=" << trace.partition.K << " iterations=" << trace.iterations;
  for (std::size_t k = 0; k < trace.partition.K; ++k) {
    s << " | k" << k << ": " << trace.partition.component_nodes(k).size() << " nodes, "
      << trace.partition.component_edges(k).size() << " edges";
  }
  output.summary = s.str();
  write_manifest("decompose", config, output.artifacts);
  return output;
}

}  // namespace hmarl
