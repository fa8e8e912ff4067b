#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hmarl/ddpg.hpp"
#include "hmarl/decompose.hpp"
#include "hmarl/features.hpp"
#include "hmarl/network.hpp"
#include "hmarl/policy.hpp"
#include "hmarl/simulator.hpp"

namespace hmarl {

enum class Strategy {
  Ddpg,          // one network-wide agent acting on every edge
  AblationLow,   // proportional allocation + learned per-component agents
  AblationHigh,  // learned allocation + local greedy per component
  Hmarl,         // learned allocation + learned per-component agents
};

std::string to_string(Strategy strategy);
/// Accepts "ddpg", "ablation-low", "ablation-high" and "hmarl".
Strategy strategy_from_string(const std::string& name);
bool is_learned_strategy(const std::string& name);

struct HmarlConfig {
  HmarlConfig();

  Strategy strategy = Strategy::Hmarl;
  double budget = 10.0;
  std::size_t episodes = 300;
  std::size_t horizon = 200;
  /// Discount of the reported attack objective (independent of agent discounts).
  double gamma_eval = 0.99;
  AgentConfig high;
  AgentConfig low;
  std::size_t buffer_capacity = 100000;
  std::size_t batch_size = 128;
  /// Half-width of the per-trip demand factors drawn each episode.
  double demand_jitter = 0.05;
  bool high_noise = true;
  /// Widens low-level critics to [global state; other agents' actions].
  bool centralized_critic = false;
  /// Greedy evaluation period (episodes); the best evaluated parameters are kept.
  std::size_t eval_every = 10;
  bool keep_best = true;

  /// Human-readable warnings for settings that contradict the recommended
  /// ordering (lower learning rates and a higher discount at the low level).
  std::vector<std::string> warnings() const;
  /// Throws std::invalid_argument for unusable values.
  void validate() const;
};

/// All learned parts of one attacker. For Strategy::Ddpg the network-wide
/// agent lives in `high`.
struct AgentSet {
  Strategy strategy = Strategy::Hmarl;
  Partition partition;
  double budget = 0.0;
  /// Multiplies vehicle counts in observations and rewards (1 / nominal demand).
  double scale = 1.0;
  std::optional<AgentBundle> high;
  std::vector<AgentBundle> low;
};

AgentSet make_agents(const RoadNetwork& network, Partition partition, double budget, double nominal_demand,
                     const HmarlConfig& config, std::uint64_t seed);

/// Output of one attacker decision.
struct Decision {
  std::vector<double> high_obs;               // scaled o_H (or the flat observation for Ddpg)
  std::vector<std::vector<double>> low_obs;   // scaled ô_k
  std::vector<double> allocation;             // b̂, sums to B
  std::vector<double> high_action;            // b̂ / B, or the edge shares for Ddpg
  std::vector<std::vector<double>> low_action;  // per-component edge shares
  Perturbation perturbation;
};

/// Two-level action: b̂ = B * head(mu_H(o_H) + noise), then for every
/// component a_k = b̂_k * head(mu_k(ô_k, b̂_k / B) + noise). Without
/// exploration the result depends only on the observations and parameters.
Decision act_hmarl(AgentBundle& high, std::span<AgentBundle> low, const Partition& partition,
                   std::span<const double> high_obs, std::span<const std::vector<double>> low_obs,
                   double budget, bool explore);
Decision act_hmarl(AgentBundle& high, std::span<AgentBundle> low, const Partition& partition,
                   std::span<const double> high_obs, std::span<const std::vector<double>> low_obs,
                   double budget, bool explore_high, bool explore_low);

/// Observes the state and decides for any strategy.
Decision decide(AgentSet& agents, const RoadNetwork& network, const TripTable& trips, const SimState& state,
                bool explore);
Decision decide(AgentSet& agents, const RoadNetwork& network, const TripTable& trips, const SimState& state,
                bool explore_high, bool explore_low);

/// Deterministic policy wrapper for evaluation episodes.
class LearnedAttack final : public AttackPolicy {
 public:
  explicit LearnedAttack(AgentSet agents) : agents_(std::move(agents)) {}
  std::string name() const override { return to_string(agents_.strategy); }
  double budget() const override { return agents_.budget; }
  Perturbation act(const RoadNetwork& network, const TripTable& trips, const SimState& state) override {
    return decide(agents_, network, trips, state, false).perturbation;
  }
  const AgentSet& agents() const { return agents_; }

 private:
  AgentSet agents_;
};

EpisodeResult evaluate_agents(const AgentSet& agents, const RoadNetwork& network, const TripTable& trips,
                              std::size_t horizon, double gamma);

struct TrainLogRow {
  std::size_t episode = 0;
  std::size_t steps = 0;
  double undiscounted_objective = 0.0;
  double discounted_objective = 0.0;
  double critic_loss_high = 0.0;      // NaN when no update ran
  double mean_critic_loss_low = 0.0;  // NaN when no update ran
  double wallclock_s = 0.0;
  std::size_t replay_size = 0;
};

struct TrainResult {
  AgentSet agents;
  std::vector<TrainLogRow> log;
  /// Greedy evaluation objective of the returned agents (nominal demand).
  double best_eval_objective = 0.0;
  std::size_t best_episode = 0;
};

/// Off-policy training of every learned part, updated each environment step
/// once the replay buffers hold a full batch.
TrainResult train_agents(const RoadNetwork& network, const TripTable& trips, Partition partition,
                         const HmarlConfig& config, std::uint64_t seed,
                         const std::function<void(const TrainLogRow&)>& on_episode = {});

/// CSV with header episode,steps,undiscounted_objective,discounted_objective,
/// critic_loss_high,mean_critic_loss_low,wallclock_s,replay_size.
void write_train_log(std::ostream& out, const std::vector<TrainLogRow>& log);

/// Writes `<dir>/agents.json` plus actor/critic files per agent
/// (`high_*`, `low_<k>_*`, or `ddpg_*`). Returns the written file paths.
std::vector<std::string> save_agents(const AgentSet& agents, const std::string& dir);
/// The network is needed to rebuild the edge side of the saved partition.
AgentSet load_agents(const std::string& dir, const RoadNetwork& network);

}  // namespace hmarl
