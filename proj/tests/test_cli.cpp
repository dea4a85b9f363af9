#include "rotors/cli.hpp"
#include "rotors/config.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rotors;
namespace fs = std::filesystem;

namespace {

struct Cli : ::testing::Test {
  fs::path dir;

  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("rotors_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    setenv("ROTORS_OUTPUT_DIR", dir.c_str(), 1);
  }
  void TearDown() override {
    unsetenv("ROTORS_OUTPUT_DIR");
    fs::remove_all(dir);
  }

  int run(std::vector<std::string> args) {
    out.str("");
    err.str("");
    return run_cli(args, out, err);
  }

  std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path write_config(const nlohmann::json& j) {
    fs::path p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p;
  }

  std::ostringstream out, err;
};

}  // namespace

TEST_F(Cli, AverageReportsAlpha) {
  ASSERT_EQ(run({"average"}), exit_ok) << err.str();
  auto j = nlohmann::json::parse(slurp(dir / "effective.json"));
  EXPECT_EQ(j.at("alpha"), nlohmann::json::array({1, 1}));
}

TEST_F(Cli, SimulateIsReproducible) {
  ASSERT_EQ(run({"simulate", "--seed", "5", "--t", "2", "--stride", "100"}), exit_ok) << err.str();
  std::string a = slurp(dir / "trajectory.csv");
  ASSERT_EQ(run({"simulate", "--seed", "5", "--t", "2", "--stride", "100"}), exit_ok);
  EXPECT_EQ(a, slurp(dir / "trajectory.csv"));
  ASSERT_EQ(run({"simulate", "--seed", "6", "--t", "2", "--stride", "100"}), exit_ok);
  EXPECT_NE(a, slurp(dir / "trajectory.csv"));
  EXPECT_EQ(a.substr(0, a.find('\n')), "t,q1,q2,q3,p1,p2,p3");
}

TEST_F(Cli, SeedIsRequired) {
  EXPECT_EQ(run({"simulate", "--t", "1"}), exit_usage);
  EXPECT_NE(err.str().find("seed"), std::string::npos);
}

TEST_F(Cli, SeedFromConfig) {
  fs::path cfg = write_config({{"seed", 3}});
  EXPECT_EQ(run({"simulate", "--config", cfg.string(), "--t", "1"}), exit_ok) << err.str();
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({"frobnicate"}), exit_usage);
  EXPECT_EQ(run({}), exit_usage);
  EXPECT_EQ(run({"simulate", "--seed", "1", "--scheme", "rk4"}), exit_usage);
  fs::path cfg = write_config({{"modle", nlohmann::json::object()}});
  EXPECT_EQ(run({"average", "--config", cfg.string()}), exit_usage);
  EXPECT_NE(err.str().find("modle"), std::string::npos);
  EXPECT_EQ(run({"average", "--config", (dir / "missing.json").string()}), exit_usage);
}

TEST_F(Cli, EquilibriumCheckNeedsEquilibrium) {
  fs::path cfg = write_config({{"model", {{"T1", 1}, {"T3", 2}}}});
  EXPECT_EQ(run({"equilibrium-check", "--config", cfg.string(), "--seed", "1", "--t", "10"}), exit_usage);
}

TEST_F(Cli, PrintConfigRoundTrips) {
  fs::path cfg = write_config({{"model", {{"T3", {7, 2}}, {"tau3", 4}}}, {"seed", 11}, {"lyapunov", {{"A", 50}}}});
  ASSERT_EQ(run({"average", "--config", cfg.string(), "--print-config"}), exit_ok) << err.str();
  nlohmann::json printed = nlohmann::json::parse(out.str());
  ExperimentConfig a = load_config(cfg.string());
  ExperimentConfig b = config_from_json(printed);
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_EQ(b.model.T3, Rational(7, 2));
  EXPECT_EQ(b.lyapunov.params.A, 50);
}

TEST_F(Cli, ControlWritesPlanAndTrajectory) {
  fs::path cfg = write_config(nlohmann::json::parse(R"({"control": {"from": {"q": [0, 0, 0], "p": [0, 0, 0]},
                                                                   "to": {"q": [1, 1, 1], "p": [0, 2, 0]},
                                                                   "h": 1e-4}})"));
  ASSERT_EQ(run({"control", "--config", cfg.string()}), exit_ok) << err.str();
  EXPECT_TRUE(fs::exists(dir / "plan.json"));
  EXPECT_TRUE(fs::exists(dir / "trajectory.csv"));
  auto rep = nlohmann::json::parse(slurp(dir / "control_report.json"));
  EXPECT_TRUE(rep.at("achieved").get<bool>());
}

TEST_F(Cli, HistAndFluxOutputs) {
  ASSERT_EQ(run({"hist", "--seed", "2", "--t", "200"}), exit_ok) << err.str();
  for (const char* f : {"hist_p1.csv", "hist_p2.csv", "hist_p3.csv", "modes.json"}) EXPECT_TRUE(fs::exists(dir / f));
  ASSERT_EQ(run({"flux", "--seed", "2", "--t", "200"}), exit_ok) << err.str();
  auto j = nlohmann::json::parse(slurp(dir / "flux.json"));
  for (const char* k : {"J1", "J3", "stderr1", "stderr3"}) EXPECT_TRUE(j.contains(k));
}
