#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmarl/decompose.hpp"
#include "hmarl/hmarl.hpp"
#include "hmarl/network.hpp"
#include "hmarl/simulator.hpp"
#include "json.hpp"

namespace hmarl {

/// Thrown for bad command-line or configuration input.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::string net_path;
  std::string trips_path;
  double budget = 10.0;
  std::size_t components = 4;
  std::uint64_t seed = 0;
  std::size_t horizon = 200;
  double gamma_eval = 0.99;
  /// none | greedy | decomposed-greedy | ddpg | ablation-low | ablation-high | hmarl
  std::string attacker = "none";
  HmarlConfig rl;
  std::string out_dir = "out";
  /// Checkpoint directory read by `evaluate`.
  std::string checkpoint;
  std::vector<double> budgets{5.0, 10.0, 15.0, 30.0};
  std::vector<std::string> strategies;  // ablation columns; empty means all seven
  std::size_t workers = 0;              // 0: hardware concurrency
  /// Denominator of the decomposed heuristic's local greedy: "component" or "global".
  std::string local_greedy_norm = "component";

  /// Unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::string& path);
  nlohmann::json to_json() const;

  /// Throws UsageError. `need_files` also checks that the inputs exist.
  void validate(bool need_files = true) const;
  /// The RL settings with budget, horizon and gamma_eval filled in.
  HmarlConfig rl_config(double budget_override) const;
};

/// The seven ablation columns in presentation order.
const std::vector<std::string>& all_strategies();
bool is_known_attacker(const std::string& name);

struct Environment {
  RoadNetwork network;
  TripTable trips;
};

Environment load_environment(const ExperimentConfig& config);
/// K-medoids partition with the "clustering" sub-seed (or a single component for K = 1).
Partition make_partition(const RoadNetwork& network, const ExperimentConfig& config);

/// Discounted objective of one cell: heuristics are rolled out directly,
/// learned strategies are trained first and evaluated greedily.
double run_strategy(const Environment& env, const Partition& partition, const ExperimentConfig& config,
                    const std::string& strategy, double budget);

struct AblationRow {
  double budget = 0.0;
  std::string strategy;
  double objective = 0.0;
  std::uint64_t seed = 0;
};

std::string format_number(double value);

/// Writes `budget,strategy,objective,seed` rows.
void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);

/// Subcommands. Each writes its artifacts plus `manifest.json` into
/// config.out_dir and returns the artifact paths.
struct CommandOutput {
  std::vector<std::string> artifacts;
  std::string summary;
};

CommandOutput cmd_simulate(const ExperimentConfig& config);
CommandOutput cmd_train(const ExperimentConfig& config);
CommandOutput cmd_evaluate(const ExperimentConfig& config);
CommandOutput cmd_ablate(const ExperimentConfig& config);
CommandOutput cmd_decompose(const ExperimentConfig& config);

/// Lowercase hex FNV-1a of a file's bytes.
std::string file_digest(const std::string& path);

}  // namespace hmarl
