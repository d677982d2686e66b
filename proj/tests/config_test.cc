#include "memlq/config.h"

#include <gtest/gtest.h>

namespace memlq {
namespace {

using nlohmann::json;

std::string ErrorOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

TEST(ConfigTest, DefaultConfig) {
  const RunConfig cfg = parse_run_config(default_config_json());
  EXPECT_EQ(cfg.sys.n(), 8);
  EXPECT_EQ(cfg.N, 64);
  ASSERT_EQ(cfg.initial.size(), 2u);
  const StatePoint x = cfg.state_point(cfg.initial[1]);
  EXPECT_EQ(x.s_index, 16);
  ASSERT_EQ(x.eta.size(), 16u);
  EXPECT_EQ(x.eta[7](0), 0.5);
  EXPECT_EQ(x.w0, Eigen::VectorXd::Unit(8, 0));
  EXPECT_EQ(cfg.levels, (std::vector<int>{32, 64, 128}));
}

TEST(ConfigTest, ExplicitModel) {
  const json j = json::parse(R"({
    "model": "explicit", "A": [[-1, 0], [0, -2]], "B": [[1], [0.5]],
    "C": [[1, 1]], "kernel": {"form": "scalar-table", "samples": [1, 0.5, 0], "h": 0.5},
    "N": 8, "initial": {"s": 0.25, "w0": [1, 0], "eta": [[0.1], [0.2]]}})");
  const RunConfig cfg = parse_run_config(j);
  EXPECT_EQ(cfg.sys.p(), 1);
  const StatePoint x = cfg.state_point(cfg.initial[0]);
  EXPECT_EQ(x.eta[1](0), 0.2);
  // Refined grid repeats each row.
  const StatePoint y = cfg.state_point(cfg.initial[0], TimeGrid(1.0, 16));
  ASSERT_EQ(y.eta.size(), 4u);
  EXPECT_EQ(y.eta[1](0), 0.1);
  EXPECT_EQ(y.eta[2](0), 0.2);
}

TEST(ConfigTest, RejectsBadValues) {
  json j = default_config_json();
  j["N"] = 1;
  EXPECT_THROW(parse_run_config(j), std::invalid_argument);
  j = default_config_json();
  j["initial"] = json::array({{{"s", 0.3}, {"w0", std::vector<double>(8, 0.0)}}});
  EXPECT_THROW(parse_run_config(j), std::invalid_argument);
  j = default_config_json();
  j["initial"] = json::array({{{"s", 0.0}, {"w0", {1.0, 2.0}}}});
  EXPECT_THROW(parse_run_config(j), std::invalid_argument);
  j = default_config_json();
  j["kernel"] = {{"form", "gamma"}};
  EXPECT_NE(ErrorOf([&] { parse_run_config(j); }).find("gamma"), std::string::npos);
  j = default_config_json();
  j["model"] = "wave";
  EXPECT_THROW(parse_run_config(j), std::invalid_argument);
}

TEST(ConfigTest, ParseErrorsReportPosition) {
  const std::string msg =
      ErrorOf([] { parse_json_text("{\n  \"N\": 64,\n  \"T\": ,\n}", "cfg.json"); });
  EXPECT_NE(msg.find("cfg.json"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_THROW(read_json_file("/nonexistent/cfg.json"), std::invalid_argument);
}

}  // namespace
}  // namespace memlq
