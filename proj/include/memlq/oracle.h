#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "memlq/model.h"
#include "memlq/propagator.h"

// Independent references used by the tests and the verify harness. Nothing
// here is used by the solvers themselves.
namespace memlq::oracle {

struct OracleConfig {
  int refinement{10};
  double qp_tol{1e-10};
};

/// Minimizes the discrete cost with a dense Hessian assembled from second
/// differences of cost_eval. Exact for a quadratic up to rounding.
ControlTrajectory brute_force_minimize(const PropagatorTables& tab,
                                       const StatePoint& x0,
                                       const OracleConfig& cfg = {});

enum class DreScheme {
  kHamiltonian,  // exact flow of the linear Hamiltonian system per step
  kHeun,         // explicit Heun in reverse time
};

/// Classical DRE  -P' = AᵀP + PA + CᵀC - PBBᵀP,  P(T) = 0, on the grid.
/// Requires a zero memory kernel.
std::vector<Eigen::MatrixXd> classical_dre(const ControlSystem& sys,
                                           const TimeGrid& grid,
                                           DreScheme scheme =
                                               DreScheme::kHamiltonian);

/// Closed-form solution of the scalar DRE -p' = 2ap + c² - b²p², p(T) = 0.
double scalar_riccati(double a, double b, double c, double T, double t);

/// e^x by argument halving and a 30-term Taylor series.
double exp_series(double x);

/// Composite Simpson rule with `panels` panels (rounded up to even).
double simpson(const std::function<double(double)>& f, double a, double b,
               int panels);

/// k-th Dirichlet Laplacian eigenvalue on (0, 1) from finite-difference
/// solves at M and 2M points, Richardson-extrapolated.
double dirichlet_eigenvalue_fd(int k, int M);

/// k-th sine coefficient of B = -AD, i.e. (kπ)² ∫_0^1 x √2 sin(kπx) dx.
double heat_input_coefficient(int k, int panels = 2000);

}  // namespace memlq::oracle
