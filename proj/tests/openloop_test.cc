#include "memlq/openloop.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "memlq/oracle.h"

namespace memlq {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

ControlSystem Scalar(double a, double b, double c, MemoryKernel k) {
  ControlSystem sys;
  sys.A = MatrixXd::Constant(1, 1, a);
  sys.B = MatrixXd::Constant(1, 1, b);
  sys.C = MatrixXd::Constant(1, 1, c);
  sys.kernel = k;
  return sys;
}

StatePoint Point(int s, VectorXd w0, int m, double eta) {
  StatePoint x;
  x.s_index = s;
  x.w0 = std::move(w0);
  x.eta.assign(s, VectorXd::Constant(m, eta));
  return x;
}

double SupDiff(const Trajectory& a, const Trajectory& b) {
  return (a.Stacked() - b.Stacked()).cwiseAbs().maxCoeff();
}

TEST(CostTest, FreeDecay) {
  const ControlSystem sys = Scalar(-1, 1, 1, MemoryKernel::Zero());
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 16));
  Trajectory u;
  u.values.assign(16, VectorXd::Zero(1));
  const double J = cost_eval(tab, Point(0, VectorXd::Ones(1), 1, 0), u);
  EXPECT_NEAR(J, (1 - std::exp(-2.0)) / 2, 1e-14);
  EXPECT_NEAR(J, 0.43233, 1e-5);
}

TEST(CostTest, ControlOnlyCost) {
  const ControlSystem sys = Scalar(-1, 1, 0, MemoryKernel::ScalarExponential(1, 1));
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 10));
  Trajectory u;
  u.start = 2;
  u.values.assign(8, VectorXd::Constant(1, 2.0));
  EXPECT_NEAR(cost_eval(tab, Point(2, VectorXd::Ones(1), 1, 1), u), 4 * 0.8, 1e-14);
}

TEST(QuadraticFormTest, NoObservationGivesIdentity) {
  const ControlSystem sys =
      build_heat_model(3, MemoryKernel::ScalarExponential(0.5, 1.0), 1.0,
                       MatrixXd::Zero(3, 3));
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 12));
  const StatePoint x = Point(3, VectorXd::Ones(3), 1, 0.5);
  const QuadraticForm qf = assemble_quadratic_form(tab, x);
  EXPECT_TRUE(qf.LambdaOp.isIdentity(1e-15));
  EXPECT_TRUE(qf.N_vec.isZero(0.0));
  const OpenLoopResult r = solve_open_loop(tab, x);
  EXPECT_EQ(r.cost, 0.0);
  for (const auto& v : r.u.values) EXPECT_TRUE(v.isZero(0.0));
}

TEST(QuadraticFormTest, MatchesCostEverywhere) {
  const ControlSystem sys =
      build_heat_model(4, MemoryKernel::ScalarExponential(0.5, 1.0), 1.0);
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 16));
  const StatePoint x = Point(4, VectorXd::Unit(4, 0), 1, 0.5);
  const QuadraticForm qf = assemble_quadratic_form(tab, x);
  std::mt19937 rng(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 5; ++trial) {
    const VectorXd u = VectorXd::NullaryExpr(12, [&] { return nd(rng); });
    const double J = cost_eval(tab, x, Trajectory::FromStacked(4, u, 1));
    EXPECT_NEAR(qf.Evaluate(u), J, 1e-12 * std::max(1.0, J));
  }
}

TEST(QuadraticFormTest, CoercivityFloor) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ud(-1, 1);
  for (int trial = 0; trial < 5; ++trial) {
    ControlSystem sys;
    sys.A = -MatrixXd::Identity(3, 3) + 0.3 * MatrixXd::NullaryExpr(3, 3, [&] { return ud(rng); });
    sys.B = MatrixXd::NullaryExpr(3, 2, [&] { return ud(rng); });
    sys.C = MatrixXd::NullaryExpr(2, 3, [&] { return ud(rng); });
    sys.kernel = MemoryKernel::ScalarExponential(ud(rng), 1.0);
    const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 8));
    const QuadraticForm qf = assemble_quadratic_form(tab, Point(2, VectorXd::Ones(3), 2, 1));
    EXPECT_GE(qf.lambda_min(), 1.0 - 1e-12);
  }
}

TEST(OpenLoopTest, AgreesWithBruteForce) {
  const ControlSystem sys = Scalar(-1, 1, 1, MemoryKernel::ScalarExponential(0.5, 1));
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 32));
  for (const StatePoint& x :
       {Point(0, VectorXd::Ones(1), 1, 0), Point(8, VectorXd::Ones(1), 1, 0.5)}) {
    const OpenLoopResult r = solve_open_loop(tab, x);
    const ControlTrajectory ref = oracle::brute_force_minimize(tab, x);
    EXPECT_LE(SupDiff(r.u, ref), 1e-8);
  }
}

TEST(OpenLoopTest, PerturbationsIncreaseCost) {
  const ControlSystem sys =
      build_heat_model(4, MemoryKernel::ScalarExponential(0.5, 1.0), 1.0);
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 16));
  const StatePoint x = Point(4, VectorXd::Unit(4, 0), 1, 0.5);
  const OpenLoopResult r = solve_open_loop(tab, x);
  EXPECT_NEAR(r.cost, cost_eval(tab, x, r.u), 1e-13);
  std::mt19937 rng(2);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 10; ++trial) {
    ControlTrajectory v = r.u;
    for (auto& e : v.values) e(0) += 1e-3 * nd(rng);
    EXPECT_GT(cost_eval(tab, x, v), r.cost);
  }
}

TEST(OpenLoopTest, ZeroKernelLambdaIsGram) {
  const ControlSystem sys = build_heat_model(3, MemoryKernel::Zero(), 1.0);
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 8));
  const StatePoint x = Point(0, VectorXd::Ones(3), 1, 0);
  const QuadraticForm qf = assemble_quadratic_form(tab, x);
  const MatrixXd G = control_to_state(tab, 0);
  EXPECT_TRUE(G.isApprox(qf.G, 1e-15));
  const MatrixXd gram =
      MatrixXd::Identity(8, 8) + G.transpose() * apply_qbar(tab, 0, G) / tab.h();
  EXPECT_LE((gram - qf.LambdaOp).cwiseAbs().maxCoeff(), 1e-13);
  for (int i = 1; i <= 8; ++i) {
    for (int j = 0; j < i; ++j) EXPECT_TRUE(tab.WH[i - j].isZero(0.0));
  }
}

TEST(OpenLoopTest, PsiZRepresentation) {
  const ControlSystem sys =
      build_heat_model(4, MemoryKernel::ScalarExponential(0.5, 1.0), 1.0);
  const TimeGrid g(1.0, 16);
  const PropagatorTables tab = build_tables(sys, g);
  const StatePoint x = Point(4, VectorXd::Unit(4, 0), 1, 0.5);
  const OpenLoopResult r = solve_open_loop(tab, x);
  const PsiZTables pz = build_psi_z(tab, 4);
  EXPECT_LE(SupDiff(psi_z_control(pz, g, x, 1), r.u), 1e-10);
  EXPECT_LE(SupDiff(psi_z_state(pz, g, x, 1), r.w), 1e-10);
}

TEST(OpenLoopTest, BadInitialDataThrow) {
  const ControlSystem sys = build_heat_model(2, MemoryKernel::Zero(), 1.0);
  const PropagatorTables tab = build_tables(sys, TimeGrid(1.0, 8));
  StatePoint x = Point(2, VectorXd::Ones(3), 1, 0);
  EXPECT_THROW(solve_open_loop(tab, x), std::invalid_argument);
  x = Point(2, VectorXd::Ones(2), 1, 0);
  x.eta[0](0) = std::nan("");
  EXPECT_ANY_THROW(solve_open_loop(tab, x));
}

}  // namespace
}  // namespace memlq
