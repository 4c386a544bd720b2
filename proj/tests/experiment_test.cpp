// Copyright 2026 The nsdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nsdp/experiment.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace nsdp {
namespace {

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class ExperimentTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("nsdp_exp_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::filesystem::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(ExperimentTest, RunWritesArtifactsAndPasses) {
  RunConfig cfg;
  cfg.algorithm = "ns-api-fixed";
  cfg.m = 3;
  cfg.errors = "uniform";
  cfg.epsilon = 0.05;
  cfg.seed = 11;
  cfg.out = dir_;
  EXPECT_EQ(cmd_run(cfg, out_, err_), kExitOk) << err_.str();
  EXPECT_TRUE(std::filesystem::exists(dir_ / "trace.json"));
  EXPECT_EQ(read_mdp(dir_ / "mdp.json"), random_mdp(10, 3, 0.9, 11));
  const auto csv = slurp(dir_ / "report.csv");
  EXPECT_EQ(csv.rfind("k,loss,bound,margin,bound_name\n", 0), 0u);
  EXPECT_NE(csv.find(",thm4\n"), std::string::npos);
  EXPECT_NE(csv.find(",lemma2\n"), std::string::npos);
}

TEST_F(ExperimentTest, RunIsByteIdenticalAcrossRepeats) {
  RunConfig cfg;
  cfg.errors = "uniform";
  cfg.epsilon = 0.1;
  cfg.seed = 5;
  cfg.out = dir_ / "a";
  ASSERT_EQ(cmd_run(cfg, out_, err_), kExitOk);
  cfg.out = dir_ / "b";
  ASSERT_EQ(cmd_run(cfg, out_, err_), kExitOk);
  for (const char *f : {"trace.json", "report.csv", "mdp.json"})
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
}

TEST_F(ExperimentTest, RunOnChainWithAdversary) {
  RunConfig cfg;
  cfg.mdp = "chain";
  cfg.n_states = 12;
  cfg.epsilon = 0.1;
  cfg.K = 10;
  cfg.errors = "adversarial";
  cfg.tie = "adversarial";
  cfg.out = dir_;
  EXPECT_EQ(cmd_run(cfg, out_, err_), kExitOk) << err_.str();
  const auto trace = nlohmann::json::parse(slurp(dir_ / "trace.json"));
  EXPECT_EQ(trace["algorithm"], "avi");
}

TEST_F(ExperimentTest, RunUsageErrors) {
  RunConfig cfg;
  cfg.out = dir_;
  cfg.algorithm = "ns-api-fixed";
  cfg.m = 0;
  EXPECT_EQ(cmd_run(cfg, out_, err_), kExitUsage);
  cfg.m = 30;
  EXPECT_EQ(cmd_run(cfg, out_, err_), kExitUsage);
  cfg = RunConfig{};
  cfg.out = dir_;
  cfg.algorithm = "bogus";
  EXPECT_EQ(cmd_run(cfg, out_, err_), kExitUsage);
  cfg.algorithm = "avi";
  cfg.errors = "gaussian";
  EXPECT_EQ(cmd_run(cfg, out_, err_), kExitUsage);
  cfg.errors = "adversarial";
  cfg.mdp = "chain";
  cfg.n_states = 5;
  cfg.K = 5;
  EXPECT_EQ(cmd_run(cfg, out_, err_), kExitUsage);
  cfg = RunConfig{};
  cfg.out = dir_;
  cfg.mdp = (dir_ / "missing.json").string();
  EXPECT_EQ(cmd_run(cfg, out_, err_), kExitUsage);
}

TEST_F(ExperimentTest, SweepIsDeterministicAcrossThreadCounts) {
  SweepConfig cfg;
  cfg.count = 4;
  cfg.max_states = 6;
  cfg.K = 8;
  cfg.seed = 3;
  cfg.threads = 1;
  std::ostringstream a, b;
  const auto sa = run_sweep(cfg, a);
  cfg.threads = 4;
  const auto sb = run_sweep(cfg, b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(sa.cells, 4u * 3u * 3u * 4u);
  EXPECT_EQ(sa.violations, 0u);
  EXPECT_EQ(sb.rows, sa.rows);
}

TEST_F(ExperimentTest, EmptySweepHasOnlyHeader) {
  SweepConfig cfg;
  cfg.count = 0;
  cfg.out = dir_;
  EXPECT_EQ(cmd_sweep(cfg, out_, err_), kExitOk);
  EXPECT_EQ(slurp(dir_ / "sweep.csv"), kSweepHeader);
}

TEST_F(ExperimentTest, SweepRejectsBadRanges) {
  SweepConfig cfg;
  cfg.min_states = 5;
  cfg.max_states = 3;
  cfg.out = dir_;
  EXPECT_EQ(cmd_sweep(cfg, out_, err_), kExitUsage);
  cfg = SweepConfig{};
  cfg.gammas = {1.0};
  cfg.out = dir_;
  EXPECT_EQ(cmd_sweep(cfg, out_, err_), kExitUsage);
}

TEST_F(ExperimentTest, ValidateExitCodes) {
  write_mdp(testing::two_state_chain(), dir_ / "ok.json");
  EXPECT_EQ(cmd_validate(dir_ / "ok.json", out_, err_), kExitOk);

  Mdp bad = testing::two_state_chain();
  bad.transitions[0][0][0].probability = 0.98;
  std::ofstream(dir_ / "bad.json") << to_json(bad).dump();
  std::ostringstream viol;
  EXPECT_EQ(cmd_validate(dir_ / "bad.json", viol, err_), kExitCheckFailed);
  EXPECT_NE(viol.str().find("state 0"), std::string::npos) << viol.str();

  std::ofstream(dir_ / "garbage.json") << "{ not json";
  EXPECT_EQ(cmd_validate(dir_ / "garbage.json", out_, err_), kExitUsage);
  EXPECT_EQ(cmd_validate(dir_ / "absent.json", out_, err_), kExitUsage);
}

TEST_F(ExperimentTest, TightnessCommand) {
  TightnessConfig cfg;
  cfg.n = 20;
  cfg.K = 15;
  cfg.out = dir_;
  EXPECT_EQ(cmd_tightness(cfg, out_, err_), kExitOk) << err_.str();
  const auto j = nlohmann::json::parse(slurp(dir_ / "tightness.json"));
  EXPECT_TRUE(j["avi"]["ok"].get<bool>());
  EXPECT_TRUE(j["api"]["ok"].get<bool>());

  cfg.K = 20;
  EXPECT_EQ(cmd_tightness(cfg, out_, err_), kExitUsage);

  cfg.K = 5;
  cfg.epsilon = 0.0;
  std::ostringstream zero;
  EXPECT_EQ(cmd_tightness(cfg, zero, err_), kExitOk);
  EXPECT_NE(zero.str().find("degenerate"), std::string::npos);
}

} // namespace
} // namespace nsdp
