#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(MEMLQ_TEST_TMP) /
           ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  // Runs the binary with the output directory set and returns the exit code.
  int Run(const std::string& args) {
    const std::string cmd = std::string(MEMLQ_CLI) + " --out " + dir_.string() +
                            " " + args + " > " + (dir_ / "stdout").string() +
                            " 2> " + (dir_ / "stderr").string();
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }

  std::string Read(const std::string& name) const {
    std::ifstream in(dir_ / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string WriteFile(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
    return (dir_ / name).string();
  }

  fs::path dir_;
};

TEST_F(CliTest, ModelCheck) {
  ASSERT_EQ(Run("model check"), 0);
  const json j = json::parse(Read("stdout"));
  EXPECT_EQ(j["n"], 8);
  EXPECT_EQ(j["valid"], true);
}

TEST_F(CliTest, OpenLoopWritesOutputs) {
  const std::string cfg = WriteFile(
      "cfg.json", R"({"n": 3, "N": 16, "kernel": {"form": "exponential", "a": 0.5, "b": 1}})");
  ASSERT_EQ(Run("--config " + cfg + " solve open-loop"), 0);
  const std::string csv = Read("control.csv");
  EXPECT_EQ(csv.rfind("t,u_1\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 17);
  EXPECT_EQ(Read("state.csv").rfind("t,x_1,x_2,x_3\n", 0), 0u);
  const json r = json::parse(Read("open_loop.json"));
  EXPECT_GT(r["cost"].get<double>(), 0.0);
  EXPECT_GE(r["lambda_min"].get<double>(), 1.0);
}

TEST_F(CliTest, RiccatiThenClosedLoop) {
  const std::string cfg = WriteFile(
      "cfg.json", R"({"n": 3, "N": 16, "kernel": {"form": "exponential", "a": 0.5, "b": 1}})");
  ASSERT_EQ(Run("--config " + cfg + " solve riccati --method backward --residuals"), 0);
  const json trip = json::parse(Read("triplet_backward.json"));
  EXPECT_EQ(trip["meta"]["N"], 16);
  EXPECT_TRUE(trip.contains("residuals"));
  ASSERT_EQ(Run("--config " + cfg + " simulate closed-loop --triplet " +
                (dir_ / "triplet_backward.json").string()),
            0);
  const json r = json::parse(Read("closed_loop.json"));
  EXPECT_GE(r["cost_fb"].get<double>(), r["cost_ol"].get<double>() * (1 - 1e-12));
  EXPECT_LT(r["sup_control_gap"].get<double>(), 0.1);
}

TEST_F(CliTest, VerifyPasses) {
  const std::string cfg = WriteFile(
      "cfg.json", R"({"n": 4, "N": 32, "kernel": {"form": "exponential", "a": 0.5, "b": 1},
                      "initial": [{"s": 0, "w0": [1, 0, 0, 0]},
                                  {"s": 0.25, "w0": [1, 0, 0, 0], "eta": 0.5}]})");
  EXPECT_EQ(Run("--config " + cfg + " verify"), 0) << Read("stdout");
  EXPECT_TRUE(json::parse(Read("verify.json"))["pass"].get<bool>());
}

TEST_F(CliTest, ConvergenceCsv) {
  const std::string cfg = WriteFile(
      "cfg.json", R"({"n": 2, "N": 16, "kernel": {"form": "exponential", "a": 0.5, "b": 1}})");
  ASSERT_EQ(Run("--config " + cfg + " convergence --levels 8,16"), 0);
  const std::string csv = Read("convergence.csv");
  EXPECT_EQ(csv.rfind("N,", 0), 0u) << csv;
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST_F(CliTest, ErrorsExitNonzero) {
  const std::string bad = WriteFile("bad.json", "{\n \"N\": 1\n}");
  EXPECT_EQ(Run("--config " + bad + " model check"), 2);
  EXPECT_NE(Read("stderr").find("N >= 2"), std::string::npos) << Read("stderr");
  const std::string broken = WriteFile("broken.json", "{\n \"N\": ,\n}");
  EXPECT_EQ(Run("--config " + broken + " model check"), 2);
  EXPECT_NE(Read("stderr").find("line 2"), std::string::npos);
  EXPECT_NE(Run("solve riccati --method euler"), 0);
}

}  // namespace
