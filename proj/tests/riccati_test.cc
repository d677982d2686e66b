#include "memlq/riccati.h"

#include <cmath>

#include <gtest/gtest.h>

#include "memlq/openloop.h"
#include "memlq/oracle.h"

namespace memlq {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr RiccatiMethod kAll[] = {
    RiccatiMethod::kQuadratureV1, RiccatiMethod::kQuadratureV2,
    RiccatiMethod::kBackward, RiccatiMethod::kPicard};

RiccatiTriplet Solve(const ControlSystem& sys, const PropagatorTables& tab,
                     RiccatiMethod method) {
  switch (method) {
    case RiccatiMethod::kBackward:
      return riccati_backward(sys, tab);
    case RiccatiMethod::kPicard:
      return riccati_picard(sys, tab).triplet;
    default:
      return riccati_by_quadrature(tab, method);
  }
}

ControlSystem Heat(int n, double kernel_a = 0.5) {
  return build_heat_model(n, MemoryKernel::ScalarExponential(kernel_a, 1.0), 1.0);
}

TEST(RiccatiMethodTest, NamesRoundTrip) {
  for (RiccatiMethod m : kAll) EXPECT_EQ(parse_riccati_method(to_string(m)), m);
  EXPECT_THROW(parse_riccati_method("euler"), std::invalid_argument);
}

TEST(RiccatiTest, FinalConditionAndShapes) {
  const ControlSystem sys = Heat(3);
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 8));
  for (RiccatiMethod m : kAll) {
    const RiccatiTriplet t = Solve(sys, tab, m);
    ASSERT_EQ(t.N(), 8);
    EXPECT_TRUE(t.P0(8).isZero(0.0)) << to_string(m);
    EXPECT_TRUE(t.levels[8].P1.isZero(0.0)) << to_string(m);
    EXPECT_TRUE(t.levels[8].P2.isZero(0.0)) << to_string(m);
    for (int i = 0; i <= 8; ++i) {
      EXPECT_EQ(t.levels[i].P1.cols(), (i + 1) * sys.m());
      EXPECT_EQ(t.levels[i].P2.rows(), (i + 1) * sys.m());
      EXPECT_LE((t.P0(i) - t.P0(i).transpose()).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_GE(Eigen::SelfAdjointEigenSolver<MatrixXd>(t.P0(i)).eigenvalues().minCoeff(),
                -1e-12);
      EXPECT_LE((t.levels[i].P2 - t.levels[i].P2.transpose()).cwiseAbs().maxCoeff(),
                1e-12);
    }
    EXPECT_LE((t.P2(5, 1, 3) - t.P2(5, 3, 1).transpose()).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(RiccatiTest, NoObservationGivesZero) {
  const ControlSystem sys =
      build_heat_model(3, MemoryKernel::ScalarExponential(0.5, 1.0), 1.0,
                       MatrixXd::Zero(3, 3));
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 8));
  const RiccatiTriplet zero = RiccatiTriplet::Zero(3, 1, 8, RiccatiMethod::kBackward);
  for (RiccatiMethod m : kAll) {
    EXPECT_EQ(sup_distance(Solve(sys, tab, m), zero), 0.0) << to_string(m);
  }
  const PicardResult pr = riccati_picard(sys, tab);
  for (const PicardWindow& w : pr.windows) EXPECT_LE(w.iterations, 1);
  const DreResidual r = dre_residual(sys, tab, zero);
  for (double v : r.max) EXPECT_EQ(v, 0.0);
}

TEST(RiccatiTest, ZeroKernelHasNoMemoryBlocks) {
  const ControlSystem sys = build_heat_model(3, MemoryKernel::Zero(), 1.0);
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 16));
  for (RiccatiMethod m : kAll) {
    const RiccatiTriplet t = Solve(sys, tab, m);
    for (const RiccatiLevel& L : t.levels) {
      EXPECT_LE(L.P1.cwiseAbs().maxCoeff(), 1e-12) << to_string(m);
      EXPECT_LE(L.P2.cwiseAbs().maxCoeff(), 1e-12) << to_string(m);
    }
  }
}

TEST(RiccatiTest, ScalarMemorylessMatchesClassical) {
  ControlSystem sys;
  sys.A = MatrixXd::Constant(1, 1, -1.0);
  sys.B = MatrixXd::Constant(1, 1, 1.0);
  sys.C = MatrixXd::Constant(1, 1, 1.0);
  const TimeGrid g(1.0, 64);
  const PropagatorTables tab = build_tables(sys, g);
  const auto classical = oracle::classical_dre(sys, g);
  const double exact = oracle::scalar_riccati(-1, 1, 1, 1.0, 0.0);
  EXPECT_NEAR(classical[0](0, 0), exact, 1e-12);
  for (RiccatiMethod m : kAll) {
    EXPECT_NEAR(Solve(sys, tab, m).P0(0)(0, 0), exact, 1e-3) << to_string(m);
  }
}

TEST(RiccatiTest, QuadratureVariantsAgree) {
  const ControlSystem sys = Heat(4);
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 16));
  const RiccatiTriplet v1 = riccati_by_quadrature(tab, RiccatiMethod::kQuadratureV1);
  const RiccatiTriplet v2 = riccati_by_quadrature(tab, RiccatiMethod::kQuadratureV2);
  EXPECT_LE(sup_distance(v1, v2), 1e-12);
  EXPECT_LE(v2.p1_route_gap, 1e-12);
}

TEST(RiccatiTest, RoutesConvergeTogether) {
  const ControlSystem sys = Heat(4);
  double prev[3] = {0, 0, 0};
  for (int N : {16, 32, 64}) {
    const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, N));
    const RiccatiTriplet q = Solve(sys, tab, RiccatiMethod::kQuadratureV2);
    const RiccatiTriplet b = Solve(sys, tab, RiccatiMethod::kBackward);
    const RiccatiTriplet p = Solve(sys, tab, RiccatiMethod::kPicard);
    const double d[3] = {sup_distance(q, b), sup_distance(q, p), sup_distance(b, p)};
    if (N > 16) {
      for (int k = 0; k < 3; ++k) EXPECT_LE(d[k], 0.5 * prev[k]) << N << " " << k;
    }
    for (int k = 0; k < 3; ++k) prev[k] = d[k];
  }
}

TEST(RiccatiTest, OptimalCostIdentity) {
  const ControlSystem sys = Heat(4);
  const TimeGrid g(1.0, 32);
  const PropagatorTables tab = build_tables(sys, g);
  StatePoint x;
  x.s_index = 8;
  x.w0 = VectorXd::Unit(4, 0);
  x.eta.assign(8, VectorXd::Constant(1, 0.5));
  const OpenLoopResult r = solve_open_loop(tab, x);
  const RiccatiTriplet q = riccati_by_quadrature(tab, RiccatiMethod::kQuadratureV2);
  EXPECT_NEAR(optimal_cost_form(q, g, x), r.cost, 1e-12 * r.cost);
  const RiccatiTriplet b = riccati_backward(sys, tab);
  EXPECT_NEAR(optimal_cost_form(b, g, x), r.cost, 1e-2 * r.cost);
}

TEST(RiccatiTest, ResidualDetectsPerturbation) {
  const ControlSystem sys = Heat(3);
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 32));
  const RiccatiTriplet b = riccati_backward(sys, tab);
  const DreResidual r = dre_residual(sys, tab, b, 0.75);
  RiccatiTriplet bad = b;
  for (int i = 0; i < bad.N(); i += 2) bad.levels[i].P0 += 0.1 * MatrixXd::Identity(3, 3);
  const DreResidual rb = dre_residual(sys, tab, bad, 0.75);
  EXPECT_GT(rb.max[0], 100 * r.max[0]);
  for (double v : r.max) EXPECT_TRUE(std::isfinite(v));
}

TEST(RiccatiTest, GainsFromTriplet) {
  const ControlSystem sys = build_heat_model(2, MemoryKernel::Zero(), 1.0);
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 8));
  const RiccatiTriplet t = riccati_backward(sys, tab);
  const GainTables g = build_gains(sys, t);
  ASSERT_EQ(g.N(), 8);
  for (int i = 0; i <= 8; ++i) {
    EXPECT_LE((g.FeedA[i] - sys.B.transpose() * t.P0(i)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_TRUE(g.FeedB[i].isZero(0.0));
  }
}

TEST(RiccatiTest, JsonRoundTrip) {
  const ControlSystem sys = Heat(2);
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 6));
  const RiccatiTriplet t = riccati_by_quadrature(tab, RiccatiMethod::kQuadratureV2);
  const RiccatiTriplet u = triplet_from_json(triplet_to_json(t));
  EXPECT_EQ(u.method, t.method);
  EXPECT_EQ(sup_distance(t, u), 0.0);
  nlohmann::json broken = triplet_to_json(t);
  broken["P1"][3].erase(0);
  EXPECT_ANY_THROW(triplet_from_json(broken));
}

}  // namespace
}  // namespace memlq
