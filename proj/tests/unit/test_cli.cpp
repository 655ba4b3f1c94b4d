#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "pdmp/cli.hpp"

using namespace pdmp;
using cli::Json;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("pdmp_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                         "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  Json base(const std::string& command, const std::string& run_id) const {
    return {{"command", command}, {"outdir", root_.string()}, {"run_id", run_id}};
  }

  int run(const Json& cfg) {
    err_.str("");
    return cli::run(cfg, err_);
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path root_;
  std::ostringstream err_;
};

}  // namespace

TEST_F(CliTest, UnknownKeyIsConfigError) {
  Json cfg = base("simulate", "a");
  cfg["horizn"] = 10;
  EXPECT_EQ(run(cfg), cli::kConfig);
  EXPECT_NE(err_.str().find("horizn"), std::string::npos);
}

TEST_F(CliTest, UnknownModelAndParameterAreConfigErrors) {
  Json cfg = base("simulate", "a");
  cfg["model"] = "no-such-model";
  EXPECT_EQ(run(cfg), cli::kConfig);
  cfg["model"] = "gene";
  cfg["params"] = {{"gamma3", 1.0}};
  EXPECT_EQ(run(cfg), cli::kConfig);
  cfg["params"] = {{"gamma1", "fast"}};
  EXPECT_EQ(run(cfg), cli::kConfig);
  cfg = base("frobnicate", "b");
  EXPECT_EQ(run(cfg), cli::kConfig);
}

TEST_F(CliTest, ModelViolationsAndStartsOutsideSpace) {
  Json cfg = base("simulate", "a");
  cfg["params"] = {{"gamma1", 1.0}};
  EXPECT_EQ(run(cfg), cli::kDomain);
  cfg = base("simulate", "b");
  cfg["x0"] = Json::array({-1.0, 0.0});
  EXPECT_EQ(run(cfg), cli::kDomain);
}

TEST_F(CliTest, ExplosionHasItsOwnExitCode) {
  Json cfg = base("estimate-chain", "k");
  cfg["model"] = "kato-shift";
  cfg["steps"] = 5000;
  EXPECT_EQ(run(cfg), cli::kExplosion);
}

TEST_F(CliTest, SimulateWritesArtifactsAndManifest) {
  Json cfg = base("simulate", "s");
  cfg["horizon"] = 20.0;
  cfg["paths"] = 3;
  ASSERT_EQ(run(cfg), cli::kOk) << err_.str();
  const fs::path dir = root_ / "s";
  for (const char* f : {"config.json", "manifest.json", "trajectories.csv", "summary.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const Json manifest = Json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["command"], "simulate");
  EXPECT_EQ(manifest["seed"], 42);
  EXPECT_EQ(manifest["version"], cli::kVersion);
  const std::string csv = slurp(dir / "trajectories.csv");
  EXPECT_EQ(csv.rfind("path_id,k,t_k,", 0), 0u);
}

TEST_F(CliTest, ConfigRoundTripReproducesArtifacts) {
  Json cfg = base("estimate-chain", "first");
  cfg["steps"] = 2000;
  cfg["params"] = {{"kappa1", 0.5}, {"kappa2", 2.0}, {"N", 2.0}};
  ASSERT_EQ(run(cfg), cli::kOk) << err_.str();
  Json again = cli::load_config_file((root_ / "first" / "config.json").string());
  again["run_id"] = "second";
  ASSERT_EQ(run(again), cli::kOk) << err_.str();
  for (const char* f : {"density.csv", "density.json", "marginal_0.csv"})
    EXPECT_EQ(slurp(root_ / "first" / f), slurp(root_ / "second" / f)) << f;
}

TEST_F(CliTest, SameSeedIsByteIdenticalAcrossWorkerCounts) {
  Json cfg = base("simulate", "w1");
  cfg["horizon"] = 30.0;
  cfg["paths"] = 6;
  ASSERT_EQ(run(cfg), cli::kOk);
  cfg["run_id"] = "w3";
  cfg["workers"] = 3;
  ASSERT_EQ(run(cfg), cli::kOk);
  EXPECT_EQ(slurp(root_ / "w1" / "trajectories.csv"), slurp(root_ / "w3" / "trajectories.csv"));
  cfg["run_id"] = "other";
  cfg["seed"] = 43;
  ASSERT_EQ(run(cfg), cli::kOk);
  EXPECT_NE(slurp(root_ / "w1" / "trajectories.csv"), slurp(root_ / "other" / "trajectories.csv"));
}

TEST_F(CliTest, RankAndDriftReports) {
  Json cfg = base("rank", "r");
  ASSERT_EQ(run(cfg), cli::kOk) << err_.str();
  const Json rank = Json::parse(slurp(root_ / "r" / "rank.json"));
  EXPECT_EQ(rank["status"], "certified");
  cfg = base("drift", "d");
  cfg["shells"] = 12;
  cfg["angles"] = 4;
  cfg["occupation_steps"] = 2000;
  ASSERT_EQ(run(cfg), cli::kOk) << err_.str();
  const Json drift = Json::parse(slurp(root_ / "d" / "drift.json"));
  EXPECT_TRUE(drift["verdict"].get<bool>());
}

TEST_F(CliTest, BinaryExitCodes) {
  const std::string exe = PDMP_CLI_PATH;
  const std::string out = " --outdir " + root_.string() + " > /dev/null 2>&1";
  auto status = [](int raw) { return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1; };
  EXPECT_EQ(status(std::system((exe + " list-models" + out).c_str())), 0);
  EXPECT_EQ(status(std::system((exe + " simulate --set horizn=3" + out).c_str())), 2);
  EXPECT_EQ(status(std::system((exe + " simulate --param gamma1=1" + out).c_str())), 3);
  EXPECT_TRUE(fs::exists(root_ / "list-models-gene-s42" / "models.json"));
}
