#pragma once

#include <vector>

#include <Eigen/Dense>

#include "memlq/model.h"

namespace memlq {

/// e^{Mh} together with the φ-functions φ₁(Mh) and φ₂(Mh), where
/// φ₁(z) = (e^z - 1)/z and φ₂(z) = (e^z - 1 - z)/z².
struct PhiFunctions {
  Eigen::MatrixXd E;
  Eigen::MatrixXd phi1;
  Eigen::MatrixXd phi2;
};
PhiFunctions phi_functions(const Eigen::MatrixXd& M, double h);

/// E_j = e^{A jh}, j = 0..N.
struct SemigroupTable {
  std::vector<Eigen::MatrixXd> E;
  const Eigen::MatrixXd& operator[](int j) const { return E.at(j); }
};
SemigroupTable build_semigroup_table(const ControlSystem& sys,
                                     const TimeGrid& grid);

/// e^{At} x for a grid time t. Uses the eigen data when present.
Eigen::VectorXd semigroup_apply(const ControlSystem& sys, const TimeGrid& grid,
                                double t, const Eigen::VectorXd& x);

/// e^{At} for arbitrary t, straight from the model (no tables).
Eigen::MatrixXd semigroup_at(const ControlSystem& sys, double t);

/// Λ̃(α, β) = ∫_β^α e^{A(α-τ)} k(τ) B dτ on grid offsets, stored for
/// 0 <= b <= a <= N. The sub-interval rule is exact for e^{A·}B and
/// linear in k, so Λ̃ is additive across nodes.
class LambdaTable {
 public:
  LambdaTable() = default;
  LambdaTable(const ControlSystem& sys, const TimeGrid& grid);

  int N() const { return N_; }
  const Eigen::MatrixXd& tilde(int a, int b) const;
  /// λ(t_i, t_q, t_s) = Λ̃(t_i - t_q, t_s - t_q).
  const Eigen::MatrixXd& lambda(int i, int q, int s) const {
    return tilde(i - q, s - q);
  }
  bool is_zero() const { return zero_; }

 private:
  int N_{0};
  bool zero_{true};
  std::vector<Eigen::MatrixXd> data_;
};
LambdaTable build_lambda_table(const ControlSystem& sys, const TimeGrid& grid);

/// Per-grid precomputation shared by all discrete maps. Controls are held
/// constant on each step, so the weight of u_j on w_i depends on i - j only.
struct PropagatorTables {
  TimeGrid grid{1.0, 2};
  int n{0};
  int m{0};
  SemigroupTable semigroup;
  LambdaTable lambda;
  Eigen::MatrixXd Phi;              // ∫_0^h e^{Ar} dr B
  std::vector<Eigen::MatrixXd> WL;  // WL[d] = E_{d-1} Phi
  std::vector<Eigen::MatrixXd> WH;  // WH[d]: memory part of the step weight
  std::vector<Eigen::MatrixXd> KB;  // KB[l] = k(t_l) B
  Eigen::MatrixXd Qint;  // cost weight of [w_i; w_{i+1}] over one step

  double h() const { return grid.h(); }
  int N() const { return grid.N(); }
  /// Weight of u_j on w_i (j < i).
  Eigen::MatrixXd input_weight(int i, int j) const {
    return WL[i - j] + WH[i - j];
  }
  /// Weight of the history sample η_j (j < s) on w_i (i >= s).
  Eigen::MatrixXd history_weight(int i, int s, int j) const;
};
PropagatorTables build_tables(const ControlSystem& sys, const TimeGrid& grid);

/// Trapezoid weights of the state grid on [t_s, T].
Eigen::VectorXd state_weights(const TimeGrid& grid, int s);

StateTrajectory apply_L(const PropagatorTables& tab, int s,
                        const ControlTrajectory& u);
StateTrajectory apply_H(const PropagatorTables& tab, int s,
                        const ControlTrajectory& u);
/// History term on [s, T]. Throws for s = 0.
StateTrajectory apply_K(const PropagatorTables& tab, int s,
                        const ControlTrajectory& eta);

// Exact transposes with respect to the weighted grid inner products
// <u, v> = h Σ u_j·v_j and <w, f> = Σ ω_i w_i·f_i.
ControlTrajectory apply_L_star(const PropagatorTables& tab, int s,
                               const StateTrajectory& f);
ControlTrajectory apply_H_star(const PropagatorTables& tab, int s,
                               const StateTrajectory& f);
ControlTrajectory apply_K_star(const PropagatorTables& tab, int s,
                               const StateTrajectory& f);

/// Grid inner products used by the adjoint identities.
double control_inner(const TimeGrid& grid, const ControlTrajectory& u,
                     const ControlTrajectory& v);
double state_inner(const TimeGrid& grid, int s, const StateTrajectory& w,
                   const StateTrajectory& f);

// Continuous adjoint formulas evaluated by refined quadrature, with f
// interpolated linearly between nodes. Values are interval averages, so they
// are comparable with the discrete adjoints. Cross-checks only.
ControlTrajectory apply_L_star_continuous(const ControlSystem& sys,
                                          const TimeGrid& grid, int s,
                                          const StateTrajectory& f,
                                          int refine = 8);
ControlTrajectory apply_H_star_continuous(const ControlSystem& sys,
                                          const TimeGrid& grid, int s,
                                          const StateTrajectory& f,
                                          int refine = 8);
ControlTrajectory apply_K_star_continuous(const ControlSystem& sys,
                                          const TimeGrid& grid, int s,
                                          const StateTrajectory& f,
                                          int refine = 8);

/// w(t) = e^{A(t-s)} w0 + (L_s + H_s) u(t) + 𝒦_s η(t) on [s, T].
StateTrajectory mild_solution(const PropagatorTables& tab, const StatePoint& x0,
                              const ControlTrajectory& u);

/// Writes `t, x_1..x_d` rows at full precision.
void write_trajectory_csv(const std::string& path, const TimeGrid& grid,
                          const Trajectory& tr, char prefix);

}  // namespace memlq
