#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "elastic/experiment.hpp"

namespace fs = std::filesystem;
using elastic::ConfigError;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("elastic_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "toy.json") << R"({
      "run_id": "toy",
      "output_dir": ")" << (dir_ / "out").string() << R"(",
      "env": {"episode_length": 30, "predictor": {"k": 2, "warmup_episodes": 1}},
      "train": {"episodes": 3, "batch_size": 8, "hidden": [8]},
      "workload": {"base_rate": 2.0, "cpu_mean": 0.5, "cpu_spread": 0.25, "mem_mean": 0.5, "mem_spread": 0.25},
      "scenario": {"seeds": [1, 2]}
    })";
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args, std::string* output = nullptr) {
    const fs::path log = dir_ / "cli.log";
    const std::string cmd = std::string(ELASTIC_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) *output = slurp(log);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string config() const { return (dir_ / "toy.json").string(); }
  fs::path out() const { return dir_ / "out"; }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, TrainZeroEpisodes) {
  ASSERT_EQ(run("train --config " + config() + " --episodes 0"), 0);
  EXPECT_EQ(slurp(out() / "toy" / "curve.csv"), "episode,mean_return,critic_loss,epsilon\n");
  EXPECT_TRUE(fs::exists(out() / "toy" / "checkpoint" / "policy_1.json"));
  const auto m = elastic::read_json_file(out() / "toy" / "manifest.json");
  EXPECT_TRUE(m.contains("timestamp_utc"));
}

TEST_F(Cli, MissingConfigIsUsageError) {
  std::string msg;
  EXPECT_EQ(run("train --config " + (dir_ / "missing.json").string(), &msg), 2);
  EXPECT_NE(msg.find("missing.json"), std::string::npos);
}

TEST_F(Cli, UnknownFieldAndBadValueAreUsageErrors) {
  std::string msg;
  EXPECT_EQ(run("train --config " + config() + " --env.nonsense 3", &msg), 2);
  EXPECT_NE(msg.find("env.nonsense"), std::string::npos);
  EXPECT_EQ(run("train --config " + config() + " --env.gamma 1.5", &msg), 2);
  EXPECT_NE(msg.find("gamma"), std::string::npos);
  EXPECT_EQ(run("frobnicate"), 2);
}

TEST_F(Cli, TrainIsByteDeterministic) {
  ASSERT_EQ(run("train --config " + config()), 0);
  const auto curve = slurp(out() / "toy" / "curve.csv");
  const auto policy = slurp(out() / "toy" / "checkpoint" / "policy_0.json");
  ASSERT_EQ(run("train --config " + config()), 0);
  EXPECT_EQ(slurp(out() / "toy" / "curve.csv"), curve);
  EXPECT_EQ(slurp(out() / "toy" / "checkpoint" / "policy_0.json"), policy);
}

TEST_F(Cli, EvaluateThresholdDeterministic) {
  ASSERT_EQ(run("evaluate --config " + config() + " --policy threshold --scenario comparative"), 0);
  const fs::path rd = out() / "toy-comparative-threshold";
  const auto report = slurp(rd / "report.json");
  const auto steps = slurp(rd / "steps" / "seed2_main.csv");
  EXPECT_TRUE(fs::exists(rd / "reports" / "seed1.json"));
  ASSERT_EQ(run("evaluate --config " + config() + " --policy threshold --scenario comparative"), 0);
  EXPECT_EQ(slurp(rd / "report.json"), report);
  EXPECT_EQ(slurp(rd / "steps" / "seed2_main.csv"), steps);
}

TEST_F(Cli, EvaluateStaticBurstIdentity) {
  ASSERT_EQ(run("evaluate --config " + config() + " --policy static --scenario burst --scenario.burst_levels [1]"), 0);
  const auto rep = elastic::read_json_file(out() / "toy-burst-static" / "report.json");
  EXPECT_NEAR(rep["metrics"]["robustness_score"]["mean"].get<double>(), 1.0, 1e-9);
}

TEST_F(Cli, EvaluateUnknownPolicy) {
  std::string msg;
  EXPECT_EQ(run("evaluate --config " + config() + " --policy magic", &msg), 2);
  EXPECT_NE(msg.find("static-peak"), std::string::npos);
  EXPECT_NE(msg.find("threshold"), std::string::npos);
}

TEST_F(Cli, EvaluateCheckpointAgentMismatch) {
  ASSERT_EQ(run("train --config " + config() + " --episodes 0"), 0);
  std::string msg;
  EXPECT_EQ(run("evaluate --config " + config() + " --policy " + (out() / "toy").string() +
                    " --env.n_agents 3 --workload.n_tenants 3",
                &msg),
            2);
  EXPECT_NE(msg.find("n_agents"), std::string::npos);
}

TEST_F(Cli, EvaluateTrainedCheckpoint) {
  ASSERT_EQ(run("train --config " + config()), 0);
  ASSERT_EQ(run("evaluate --config " + config() + " --policy " + (out() / "toy").string()), 0);
  EXPECT_TRUE(fs::exists(out() / "toy-comparative-marl" / "report.json"));
}

TEST_F(Cli, ReplayReproducesBytes) {
  ASSERT_EQ(run("evaluate --config " + config() + " --policy threshold --scenario isolation"), 0);
  const fs::path rd = out() / "toy-isolation-threshold";
  const auto report = slurp(rd / "report.json");
  const auto steps = slurp(rd / "steps" / "seed1_with_aggressor.csv");
  fs::remove(rd / "report.json");
  ASSERT_EQ(run("replay " + (rd / "manifest.json").string()), 0);
  EXPECT_EQ(slurp(rd / "report.json"), report);
  EXPECT_EQ(slurp(rd / "steps" / "seed1_with_aggressor.csv"), steps);

  ASSERT_EQ(run("train --config " + config()), 0);
  const auto curve = slurp(out() / "toy" / "curve.csv");
  fs::remove(out() / "toy" / "curve.csv");
  ASSERT_EQ(run("replay " + (out() / "toy" / "manifest.json").string()), 0);
  EXPECT_EQ(slurp(out() / "toy" / "curve.csv"), curve);
}

TEST_F(Cli, ReportTable) {
  ASSERT_EQ(run("evaluate --config " + config() + " --policy threshold"), 0);
  const std::string rd = (out() / "toy-comparative-threshold").string();
  std::string text;
  ASSERT_EQ(run("report " + rd + " --json " + (dir_ / "t.json").string(), &text), 0);
  EXPECT_NE(text.find("78.6"), std::string::npos);
  EXPECT_NE(text.find("0.92"), std::string::npos);
  EXPECT_NE(text.find("6.3"), std::string::npos);
  EXPECT_NE(text.find("not a target"), std::string::npos);
  const auto one = elastic::read_json_file(dir_ / "t.json");

  ASSERT_EQ(run("report " + rd + " " + rd + " --json " + (dir_ / "t2.json").string()), 0);
  const auto two = elastic::read_json_file(dir_ / "t2.json");
  ASSERT_EQ(two["rows"].size(), 2u);
  EXPECT_EQ(two["rows"][0], two["rows"][1]);
  EXPECT_EQ(two["rows"][0], one["rows"][0]);

  EXPECT_EQ(run("report"), 2);
  EXPECT_EQ(run("report " + (dir_ / "nothing").string()), 2);
}

TEST(Config, OverridesAndDefaults) {
  const auto cfg = elastic::load_experiment({}, {{"env.n_agents", "3"}, {"workload.n_tenants", "3"}, {"train.joint_max", "per_agent_greedy"}});
  EXPECT_EQ(cfg.env.n_agents, 3);
  EXPECT_EQ(cfg.train.joint_max, elastic::JointMaxMode::PerAgentGreedy);
  EXPECT_THROW(elastic::load_experiment({}, {{"env.n_agents", "3"}}), ConfigError);
  EXPECT_THROW(elastic::load_experiment({}, {{"train.joint_max", "psychic"}}), ConfigError);
  EXPECT_THROW(elastic::load_experiment({}, {{"bogus", "1"}}), ConfigError);
}
