#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "hmarl/experiment.hpp"
#include "support.hpp"

using namespace hmarl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig sioux_config(const std::string& out) {
  ExperimentConfig c;
  c.net_path = testing::data_path("SiouxFalls/SiouxFalls_net.tntp");
  c.trips_path = testing::data_path("SiouxFalls/SiouxFalls_trips.tntp");
  c.out_dir = (fs::temp_directory_path() / out).string();
  fs::remove_all(c.out_dir);
  return c;
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("config JSON round trip") {
    ExperimentConfig c;
    c.budget = 12.5;
    c.components = 3;
    c.seed = 99;
    c.attacker = "hmarl";
    c.budgets = {1.0, 2.0};
    c.strategies = {"none", "hmarl"};
    c.rl.episodes = 17;
    c.rl.low.actor_hidden = {32};
    c.rl.high.action_head = OutputHead::L1Relu;
    const ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(back.rl.low.actor_hidden == std::vector<std::size_t>{32});
    CHECK(back.rl.high.action_head == OutputHead::L1Relu);
  }

  TEST_CASE("config rejects unknown keys and bad values") {
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"budgett", 3}}), UsageError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"rl", {{"episode", 3}}}}), UsageError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"rl", {{"low", {{"lr", 3}}}}}}), UsageError);
    ExperimentConfig c;
    c.attacker = "random";
    CHECK_THROWS_AS(c.validate(false), UsageError);
    c = ExperimentConfig{};
    c.strategies = {"greedy", "oracle"};
    CHECK_THROWS_AS(c.validate(false), UsageError);
    c = ExperimentConfig{};
    c.budget = -1.0;
    CHECK_THROWS_AS(c.validate(false), UsageError);
    c = ExperimentConfig{};
    CHECK_THROWS_AS(c.validate(true), UsageError);
    c.rl.batch_size = 0;
    CHECK_THROWS_AS(c.validate(false), UsageError);
    CHECK_THROWS_AS(ExperimentConfig::from_file("/nonexistent/config.json"), UsageError);
  }

  TEST_CASE("greedy with zero budget equals no attack") {
    ExperimentConfig c = sioux_config("hmarl_exp_b0");
    c.attacker = "none";
    const Environment env = load_environment(c);
    const Partition p = single_component(env.network);
    CHECK(run_strategy(env, p, c, "greedy", 0.0) == run_strategy(env, p, c, "none", 0.0));
  }

  TEST_CASE("simulate writes a step log and manifest") {
    ExperimentConfig c = sioux_config("hmarl_exp_sim");
    c.attacker = "greedy";
    c.budget = 5.0;
    const CommandOutput out = cmd_simulate(c);
    REQUIRE(out.artifacts.size() == 1);
    CHECK(fs::path(out.artifacts[0]).filename() == "steps_greedy_B5.csv");
    CHECK(slurp(out.artifacts[0]).rfind("step,remaining,objective_contribution\n", 0) == 0);
    const auto manifest = nlohmann::json::parse(slurp(fs::path(c.out_dir) / "manifest.json"));
    CHECK(manifest.at("command") == "simulate");
    CHECK(manifest.at("artifacts").at("steps_greedy_B5.csv") == file_digest(out.artifacts[0]));
    c.attacker = "hmarl";
    CHECK_THROWS_AS(cmd_simulate(c), UsageError);
    fs::remove_all(c.out_dir);
  }

  TEST_CASE("train and evaluate a checkpoint") {
    ExperimentConfig c = sioux_config("hmarl_exp_train");
    c.attacker = "hmarl";
    c.budget = 30.0;
    c.rl.episodes = 0;
    const CommandOutput trained = cmd_train(c);
    const fs::path ckpt = fs::path(c.out_dir) / "checkpoints";
    CHECK(fs::exists(ckpt / "agents.json"));
    CHECK(fs::exists(ckpt / "high_actor.bin"));
    for (int k = 0; k < 4; ++k) CHECK(fs::exists(ckpt / ("low_" + std::to_string(k) + "_actor.bin")));
    CHECK_FALSE(fs::exists(ckpt / "low_4_actor.bin"));
    CHECK(fs::exists(fs::path(c.out_dir) / "train_log.csv"));

    c.budget = 5.0;  // the checkpoint's budget wins
    const CommandOutput ev = cmd_evaluate(c);
    CHECK(fs::path(ev.artifacts[0]).filename() == "steps_hmarl_B30.csv");
    CHECK(ev.summary.find("budget=30") != std::string::npos);

    ExperimentConfig d = sioux_config("hmarl_exp_ddpg");
    d.attacker = "ddpg";
    d.rl.episodes = 0;
    cmd_train(d);
    const AgentSet flat = load_agents((fs::path(d.out_dir) / "checkpoints").string(), load_environment(d).network);
    CHECK(flat.high->action_dim == 76);

    c.attacker = "greedy";
    CHECK_THROWS_AS(cmd_train(c), UsageError);
    fs::remove_all(c.out_dir);
    fs::remove_all(d.out_dir);
  }

  TEST_CASE("ablation grid is ordered and reproducible") {
    ExperimentConfig c = sioux_config("hmarl_exp_ablate");
    c.budgets = {5.0};
    c.strategies = {"none", "greedy"};
    c.workers = 2;
    const CommandOutput first = cmd_ablate(c);
    const std::string a = slurp(first.artifacts[0]);
    std::istringstream lines(a);
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(lines, line)) rows.push_back(line);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "budget,strategy,objective,seed");
    CHECK(rows[1].rfind("5,none,", 0) == 0);
    CHECK(rows[2].rfind("5,greedy,", 0) == 0);
    c.workers = 1;
    CHECK(slurp(cmd_ablate(c).artifacts[0]) == a);
    fs::remove_all(c.out_dir);
  }

  TEST_CASE("decompose writes a partition map") {
    ExperimentConfig c = sioux_config("hmarl_exp_dec");
    const CommandOutput out = cmd_decompose(c);
    std::istringstream in(slurp(out.artifacts[0]));
    std::string line;
    int nodes = 0;
    while (std::getline(in, line)) {
      if (!line.empty() && line.rfind("node", 0) != 0) ++nodes;
    }
    CHECK(nodes == 24);
    fs::remove_all(c.out_dir);
  }

  TEST_CASE("number formatting is shortest round-trip") {
    CHECK(format_number(5.0) == "5");
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1234567.25) == "1234567.25");
  }
}
