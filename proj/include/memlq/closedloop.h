#pragma once

#include <vector>

#include <Eigen/Dense>

#include "memlq/model.h"
#include "memlq/propagator.h"
#include "memlq/riccati.h"

namespace memlq {

/// Result of driving the system with the feedback law
///   law(t) = -FeedA(t) w(t) - ∫_0^t FeedB(t, p) θ(p) dp,
/// where θ is η on [0, s) and the applied control on [s, t).
struct FeedbackRun {
  ControlTrajectory u;  // held on each step [t_i, t_{i+1})
  StateTrajectory w;
  std::vector<Eigen::VectorXd> theta;  // one sample per step of [0, T)
  // The law at nodes s..N, split into its state and history parts.
  std::vector<Eigen::VectorXd> state_term;
  std::vector<Eigen::VectorXd> history_term;
};

/// Steps t_i → t_{i+1} holding u_i = (law(t_i) + law(t_{i+1}))/2, which is a
/// small m×m solve since law(t_{i+1}) depends on u_i through w and θ. The
/// state advances through the discrete mild solution.
FeedbackRun simulate_closed_loop(const PropagatorTables& tab,
                                 const GainTables& gains, const StatePoint& x0);

struct DpReport {
  double distance{0.0};  // sup |û(s) - û(s')| on [s', T)
  double scale{0.0};     // sup |û(s)| on [s', T)
};

/// Solves from (s, X0), restarts at s' from (ŵ(s'), θ|[0, s')) and compares
/// the two controls on [s', T).
DpReport dp_consistency_check(const PropagatorTables& tab,
                              const StatePoint& x0, int s_prime);

}  // namespace memlq
