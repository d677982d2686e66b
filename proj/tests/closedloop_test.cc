#include "memlq/closedloop.h"

#include <cmath>

#include <gtest/gtest.h>

#include "memlq/openloop.h"

namespace memlq {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

StatePoint Point(int s, int n, double eta) {
  StatePoint x;
  x.s_index = s;
  x.w0 = VectorXd::Unit(n, 0);
  x.eta.assign(s, VectorXd::Constant(1, eta));
  return x;
}

double Sup(const Trajectory& t) { return t.Stacked().cwiseAbs().maxCoeff(); }

TEST(ClosedLoopTest, NoObservationIsFreeEvolution) {
  const ControlSystem sys =
      build_heat_model(3, MemoryKernel::ScalarExponential(0.5, 1.0), 1.0,
                       MatrixXd::Zero(3, 3));
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 16));
  const RiccatiTriplet t = riccati_backward(sys, tab);
  const StatePoint x = Point(4, 3, 0.5);
  const FeedbackRun fb = simulate_closed_loop(tab, build_gains(sys, t), x);
  EXPECT_EQ(Sup(fb.u), 0.0);
  Trajectory zero;
  zero.start = 4;
  zero.values.assign(12, VectorXd::Zero(1));
  const StateTrajectory free = mild_solution(tab, x, zero);
  EXPECT_LE((fb.w.Stacked() - free.Stacked()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ClosedLoopTest, MemorylessLawIsStateFeedback) {
  const ControlSystem sys = build_heat_model(3, MemoryKernel::Zero(), 1.0);
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 16));
  const RiccatiTriplet t = riccati_by_quadrature(tab, RiccatiMethod::kQuadratureV2);
  const StatePoint x = Point(0, 3, 0.0);
  const FeedbackRun fb = simulate_closed_loop(tab, build_gains(sys, t), x);
  ASSERT_EQ(fb.state_term.size(), 17u);
  for (int i = 0; i <= 16; ++i) {
    const VectorXd law = -sys.B.transpose() * t.P0(i) * fb.w.at(i);
    EXPECT_LE((fb.state_term[i] - law).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(fb.history_term[i].cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ClosedLoopTest, FeedbackTracksOpenLoop) {
  const ControlSystem sys =
      build_heat_model(4, MemoryKernel::ScalarExponential(0.5, 1.0), 1.0);
  double prev = 0.0;
  for (int N : {16, 32, 64}) {
    const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, N));
    const RiccatiTriplet t = riccati_by_quadrature(tab, RiccatiMethod::kQuadratureV2);
    const StatePoint x = Point(N / 4, 4, 0.5);
    const FeedbackRun fb = simulate_closed_loop(tab, build_gains(sys, t), x);
    const OpenLoopResult ol = solve_open_loop(tab, x);
    const double gap =
        (fb.u.Stacked() - ol.u.Stacked()).cwiseAbs().maxCoeff() / Sup(ol.u);
    EXPECT_GE(cost_eval(tab, x, fb.u), ol.cost * (1 - 1e-12));
    if (N > 16) EXPECT_LE(gap, 0.6 * prev) << N;
    prev = gap;
  }
  EXPECT_LE(prev, 2e-2);
}

TEST(ClosedLoopTest, ThetaCarriesHistoryThenControl) {
  const ControlSystem sys =
      build_heat_model(2, MemoryKernel::ScalarExponential(0.5, 1.0), 1.0);
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 8));
  const RiccatiTriplet t = riccati_backward(sys, tab);
  const StatePoint x = Point(3, 2, 0.5);
  const FeedbackRun fb = simulate_closed_loop(tab, build_gains(sys, t), x);
  ASSERT_EQ(fb.theta.size(), 8u);
  for (int j = 0; j < 3; ++j) EXPECT_EQ(fb.theta[j](0), 0.5);
  for (int j = 3; j < 8; ++j) EXPECT_EQ(fb.theta[j], fb.u.at(j));
}

TEST(ClosedLoopTest, GridMismatchThrows) {
  const ControlSystem sys = build_heat_model(2, MemoryKernel::Zero(), 1.0);
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 8));
  const PropagatorTables other = build_tables(sys, TimeGrid(1.0, 16));
  const GainTables g = build_gains(sys, riccati_backward(sys, other));
  EXPECT_ANY_THROW(simulate_closed_loop(tab, g, Point(0, 2, 0)));
}

TEST(DynamicProgrammingTest, RestartReproducesControl) {
  const ControlSystem sys =
      build_heat_model(4, MemoryKernel::ScalarExponential(0.5, 1.0), 1.0);
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 32));
  const StatePoint x = Point(4, 4, 0.5);
  EXPECT_EQ(dp_consistency_check(tab, x, 4).distance, 0.0);
  for (int sp : {8, 16, 28}) {
    const DpReport r = dp_consistency_check(tab, x, sp);
    EXPECT_LE(r.distance, 1e-10 * std::max(1.0, r.scale)) << sp;
  }
  EXPECT_ANY_THROW(dp_consistency_check(tab, x, 2));
}

}  // namespace
}  // namespace memlq
