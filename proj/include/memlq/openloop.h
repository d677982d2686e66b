#pragma once

#include <vector>

#include <Eigen/Dense>

#include "memlq/model.h"
#include "memlq/propagator.h"

namespace memlq {

/// Applies the block-tridiagonal state cost matrix Q̄ on nodes s..N to a
/// block column X with (N - s + 1)·n rows.
Eigen::MatrixXd apply_qbar(const PropagatorTables& tab, int s,
                           const Eigen::MatrixXd& X);

/// Control-to-state matrix G of L_s + H_s: block (i, j) = weight of u_j on
/// w_i, rows i = s..N, columns j = s..N-1.
Eigen::MatrixXd control_to_state(const PropagatorTables& tab, int s);

/// J(u) = ∫_s^T |Cw|² + |u|² dt for the mild solution from x0. The state part
/// is integrated exactly for the piecewise exponential profile between nodes.
double cost_eval(const PropagatorTables& tab, const StatePoint& x0,
                 const ControlTrajectory& u);

/// J(u) = M_val + 2<N_vec, u> + <LambdaOp u, u> with <u, v> = h Σ u_j·v_j.
struct QuadraticForm {
  TimeGrid grid{1.0, 2};
  int s{0};
  int m{0};
  Eigen::MatrixXd G;
  Eigen::MatrixXd LambdaOp;
  Eigen::VectorXd N_vec;
  double M_val{0.0};

  double Evaluate(const Eigen::VectorXd& u) const;
  double lambda_min() const;
};

QuadraticForm assemble_quadratic_form(const PropagatorTables& tab,
                                      const StatePoint& x0);

/// Solves LambdaOp û = -N_vec by Cholesky.
ControlTrajectory solve_open_loop(const QuadraticForm& qf);

/// ψ/Z operators for one initial node s. Controls live on steps j = s..N-1,
/// states on nodes i = s..N, history nodes p = 0..s.
struct PsiZTables {
  int s{0};
  std::vector<Eigen::MatrixXd> psi1;  // psi1[j - s]: m×n
  std::vector<Eigen::MatrixXd> psi2;  // psi2[j - s]: m×(s+1)m, block p
  std::vector<Eigen::MatrixXd> Z1;    // Z1[i - s]: n×n
  std::vector<Eigen::MatrixXd> Z2;    // Z2[i - s]: n×(s+1)m, block p

  // Stacked forms used by the Riccati quadrature.
  Eigen::MatrixXd Ec;  // e^{A(t_i - s)} stacked over i
  Eigen::MatrixXd Lc;  // λ(t_i, p, s) stacked over i, blocks p
  Eigen::MatrixXd Z1c;
  Eigen::MatrixXd Z2c;
  Eigen::MatrixXd psi1c;
  Eigen::MatrixXd psi2c;
};

PsiZTables build_psi_z(const PropagatorTables& tab, int s);

/// û(t_j) = ψ₁ w0 + ∫_0^s ψ₂(·, p, s) η(p) dp with η held on each step.
ControlTrajectory psi_z_control(const PsiZTables& pz, const TimeGrid& grid,
                                const StatePoint& x0, int m);
/// ŵ(t_i) = Z₁ w0 + ∫_0^s Z₂(·, p, s) η(p) dp.
StateTrajectory psi_z_state(const PsiZTables& pz, const TimeGrid& grid,
                            const StatePoint& x0, int m);

/// Full open-loop solve from x0: control, state, cost and λ_min.
struct OpenLoopResult {
  ControlTrajectory u;
  StateTrajectory w;
  double cost{0.0};
  double lambda_min{0.0};
};
OpenLoopResult solve_open_loop(const PropagatorTables& tab,
                               const StatePoint& x0);

}  // namespace memlq
