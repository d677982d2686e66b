#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "memlq/config.h"
#include "memlq/riccati.h"

namespace memlq {

struct CheckResult {
  std::string name;
  bool pass{false};
  std::string detail;
};

/// Everything measured at one grid level for a model and a set of initial
/// data. Gaps are maxima over the initial data.
struct LevelMetrics {
  int N{0};
  double feedback_gap{0.0};       // sup|û - û_fb| / sup|û|
  bool feedback_cost_ok{true};    // J(û_fb) >= J(û) for every datum
  double cost_gap_backward{0.0};  // |J(û) - (P(s)X0, X0)| / J(û)
  double cost_gap_quadrature{0.0};
  double d_v1_v2{0.0};
  double p1_route_gap{0.0};
  double d_v2_backward{0.0};
  double d_v2_picard{0.0};
  double d_backward_picard{0.0};
  double triplet_scale{0.0};  // max |entry| of the v2 triplet
  DreResidual residual_backward;
  bool final_exact{true};  // every route has bitwise-zero P(T)
  double p0_asymmetry{0.0};
  double p0_min_eig{0.0};
  double p2_asymmetry{0.0};
  std::vector<PicardWindow> picard_windows;
  double seconds{0.0};
};

LevelMetrics measure_level(const ControlSystem& sys, int N,
                           const std::vector<InitialSpec>& initial,
                           const RunConfig& cfg);

/// Successive-level check: the finer value is at most `ratio` times the
/// coarser one, or already at the rounding floor.
bool refines(double coarse, double fine, double ratio, double floor);

/// Invariant suite at the configured size.
std::vector<CheckResult> run_verify(const RunConfig& cfg);

/// Convergence sweep over `levels`; returns CSV text.
std::string run_convergence(const RunConfig& cfg, const std::vector<int>& levels);

nlohmann::json checks_to_json(const std::vector<CheckResult>& checks);

}  // namespace memlq
