#include <CLI11.hpp>
#include <iostream>

#include "hmarl/experiment.hpp"

namespace {

struct Flags {
  std::string config;
  std::string net;
  std::string trips;
  double budget = 0.0;
  std::size_t components = 0;
  std::uint64_t seed = 0;
  std::size_t episodes = 0;
  std::size_t horizon = 0;
  std::string attacker;
  std::string out;
  std::string checkpoint;
  std::vector<double> budgets;
  std::vector<std::string> strategies;
  std::size_t workers = 0;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config file (flags override it)");
  cmd->add_option("--net", f.net, "network file (TNTP)");
  cmd->add_option("--trips", f.trips, "trip table (TNTP)");
  cmd->add_option("--budget", f.budget, "perturbation budget B");
  cmd->add_option("--components", f.components, "number of components K");
  cmd->add_option("--seed", f.seed, "global seed");
  cmd->add_option("--episodes", f.episodes, "training episodes");
  cmd->add_option("--horizon", f.horizon, "episode horizon");
  cmd->add_option("--attacker", f.attacker,
                  "none | greedy | decomposed-greedy | ddpg | ablation-low | ablation-high | hmarl");
  cmd->add_option("--out", f.out, "output directory");
}

hmarl::ExperimentConfig resolve(CLI::App* cmd, const Flags& f) {
  hmarl::ExperimentConfig c = f.config.empty() ? hmarl::ExperimentConfig{} : hmarl::ExperimentConfig::from_file(f.config);
  auto given = [&](const char* name) { return cmd->count(name) > 0; };
  if (given("--net")) c.net_path = f.net;
  if (given("--trips")) c.trips_path = f.trips;
  if (given("--budget")) c.budget = f.budget;
  if (given("--components")) c.components = f.components;
  if (given("--seed")) c.seed = f.seed;
  if (given("--episodes")) c.rl.episodes = f.episodes;
  if (given("--horizon")) c.horizon = f.horizon;
  if (given("--attacker")) c.attacker = f.attacker;
  if (given("--out")) c.out_dir = f.out;
  if (cmd->get_option_no_throw("--checkpoint") && given("--checkpoint")) c.checkpoint = f.checkpoint;
  if (cmd->get_option_no_throw("--budgets") && given("--budgets")) c.budgets = f.budgets;
  if (cmd->get_option_no_throw("--strategies") && given("--strategies")) c.strategies = f.strategies;
  if (cmd->get_option_no_throw("--workers") && given("--workers")) c.workers = f.workers;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial travel-time perturbation on road networks"};
  app.require_subcommand(1);
  Flags f;

  auto* simulate = app.add_subcommand("simulate", "roll out one episode with a heuristic attacker");
  auto* train = app.add_subcommand("train", "train a learned attacker and write checkpoints");
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint (or a heuristic attacker)");
  auto* ablate = app.add_subcommand("ablate", "run the strategy x budget grid");
  auto* decompose = app.add_subcommand("decompose", "cluster the network into components");
  for (auto* cmd : {simulate, train, evaluate, ablate, decompose}) add_common(cmd, f);
  evaluate->add_option("--checkpoint", f.checkpoint, "checkpoint directory (default <out>/checkpoints)");
  ablate->add_option("--budgets", f.budgets, "budgets of the grid");
  ablate->add_option("--strategies", f.strategies, "strategies of the grid");
  ablate->add_option("--workers", f.workers, "worker threads (0: all cores)");

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* cmd = app.get_subcommands().front();
    const hmarl::ExperimentConfig config = resolve(cmd, f);
    hmarl::CommandOutput out;
    if (cmd == simulate) out = hmarl::cmd_simulate(config);
    if (cmd == train) out = hmarl::cmd_train(config);
    if (cmd == evaluate) out = hmarl::cmd_evaluate(config);
    if (cmd == ablate) out = hmarl::cmd_ablate(config);
    if (cmd == decompose) out = hmarl::cmd_decompose(config);
    std::cout << out.summary << '\n';
    for (const std::string& path : out.artifacts) std::cout << "wrote " << path << '\n';
  } catch (const hmarl::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
