#include "memlq/propagator.h"

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace memlq {

using Eigen::MatrixXd;
using Eigen::VectorXd;

PhiFunctions phi_functions(const MatrixXd& M, double h) {
  // exp of [[Mh, I, 0], [0, 0, I], [0, 0, 0]] carries e^{Mh}, φ₁, φ₂ in its
  // first block row.
  const int n = static_cast<int>(M.rows());
  MatrixXd X = MatrixXd::Zero(3 * n, 3 * n);
  X.topLeftCorner(n, n) = M * h;
  X.block(0, n, n, n).setIdentity();
  X.block(n, 2 * n, n, n).setIdentity();
  MatrixXd F = X.exp();
  return {F.topLeftCorner(n, n), F.block(0, n, n, n), F.block(0, 2 * n, n, n)};
}

MatrixXd semigroup_at(const ControlSystem& sys, double t) {
  if (sys.eigen) {
    const auto& V = sys.eigen->eigenvectors;
    VectorXd e = (sys.eigen->eigenvalues * t).array().exp();
    return V * e.asDiagonal() * V.transpose();
  }
  return (sys.A * t).exp();
}

SemigroupTable build_semigroup_table(const ControlSystem& sys,
                                     const TimeGrid& grid) {
  SemigroupTable tab;
  const int N = grid.N();
  tab.E.reserve(N + 1);
  tab.E.push_back(MatrixXd::Identity(sys.n(), sys.n()));
  const MatrixXd E1 = semigroup_at(sys, grid.h());
  for (int j = 0; j < N; ++j) tab.E.push_back(E1 * tab.E.back());
  return tab;
}

VectorXd semigroup_apply(const ControlSystem& sys, const TimeGrid& grid,
                         double t, const VectorXd& x) {
  const int i = grid.index_of(t);
  if (x.size() != sys.n()) throw std::invalid_argument("x must have length n");
  if (sys.eigen) {
    const auto& V = sys.eigen->eigenvectors;
    VectorXd e = (sys.eigen->eigenvalues * t).array().exp();
    return V * (e.asDiagonal() * (V.transpose() * x));
  }
  const MatrixXd E1 = (sys.A * grid.h()).exp();
  VectorXd y = x;
  for (int j = 0; j < i; ++j) y = E1 * y;
  return y;
}

LambdaTable::LambdaTable(const ControlSystem& sys, const TimeGrid& grid)
    : N_(grid.N()) {
  const int n = sys.n(), m = sys.m();
  const double h = grid.h();
  const PhiFunctions ph = phi_functions(sys.A, h);
  // k linear on each step: ∫_0^h e^{A(h-r)} [(1 - r/h)K_l + (r/h)K_{l+1}] dr.
  const MatrixXd Wa = h * (ph.phi1 - ph.phi2);
  const MatrixXd Wb = h * ph.phi2;
  std::vector<MatrixXd> step(N_);
  zero_ = true;
  for (int l = 0; l < N_; ++l) {
    step[l] = (Wa * sys.k(grid.t(l)) + Wb * sys.k(grid.t(l + 1))) * sys.B;
    if (!step[l].isZero(0.0)) zero_ = false;
  }
  data_.assign((N_ + 1) * (N_ + 2) / 2, MatrixXd::Zero(n, m));
  // Λ̃(a+1, b) = e^{Ah} Λ̃(a, b) + step(a).
  for (int b = 0; b <= N_; ++b) {
    for (int a = b; a < N_; ++a) {
      data_[(a + 1) * (a + 2) / 2 + b] =
          ph.E * data_[a * (a + 1) / 2 + b] + step[a];
    }
  }
}

const MatrixXd& LambdaTable::tilde(int a, int b) const {
  if (b < 0 || b > a || a > N_) {
    throw std::out_of_range("LambdaTable: offsets out of range");
  }
  return data_[a * (a + 1) / 2 + b];
}

LambdaTable build_lambda_table(const ControlSystem& sys, const TimeGrid& grid) {
  return LambdaTable(sys, grid);
}

MatrixXd PropagatorTables::history_weight(int i, int s, int j) const {
  // η held on [t_j, t_{j+1}); λ(t_i, ·, t_s) is integrated by the trapezoid.
  return 0.5 * h() * (lambda.lambda(i, j, s) + lambda.lambda(i, j + 1, s));
}

PropagatorTables build_tables(const ControlSystem& sys, const TimeGrid& grid) {
  sys.Validate(grid.h());
  if (std::abs(sys.T - grid.T()) > 1e-12 * sys.T) {
    throw std::invalid_argument("grid horizon differs from the system horizon");
  }
  PropagatorTables tab;
  tab.grid = grid;
  tab.n = sys.n();
  tab.m = sys.m();
  const int N = grid.N(), n = sys.n();
  const double h = grid.h();
  tab.semigroup = build_semigroup_table(sys, grid);
  tab.lambda = LambdaTable(sys, grid);
  const PhiFunctions ph = phi_functions(sys.A, h);
  tab.Phi = h * ph.phi1 * sys.B;
  tab.WL.assign(N + 1, MatrixXd());
  tab.WH.assign(N + 1, MatrixXd());
  for (int d = 1; d <= N; ++d) {
    tab.WL[d] = tab.semigroup[d - 1] * tab.Phi;
    tab.WH[d] = 0.5 * h *
                (tab.lambda.tilde(d, 0) + tab.lambda.tilde(d - 1, 0));
  }
  for (int l = 0; l <= N; ++l) tab.KB.push_back(sys.k(grid.t(l)) * sys.B);

  // Cost over one step: w is exactly e^{Ar}w_i + r φ₁(Ar) c on the step, with
  // c fixed by w_{i+1}. The Gramian of that family comes from Van Loan's
  // block exponential for the augmented generator [[A, I], [0, 0]].
  MatrixXd Ah = MatrixXd::Zero(2 * n, 2 * n);
  Ah.topLeftCorner(n, n) = sys.A;
  Ah.topRightCorner(n, n).setIdentity();
  MatrixXd Qh = MatrixXd::Zero(2 * n, 2 * n);
  Qh.topLeftCorner(n, n) = sys.C.transpose() * sys.C;
  MatrixXd VL = MatrixXd::Zero(4 * n, 4 * n);
  VL.topLeftCorner(2 * n, 2 * n) = -Ah.transpose();
  VL.topRightCorner(2 * n, 2 * n) = Qh;
  VL.bottomRightCorner(2 * n, 2 * n) = Ah;
  const MatrixXd F = (VL * h).exp();
  const MatrixXd W = F.bottomRightCorner(2 * n, 2 * n).transpose() *
                     F.topRightCorner(2 * n, 2 * n);
  const MatrixXd Gi = (h * ph.phi1).inverse();
  MatrixXd Tm = MatrixXd::Zero(2 * n, 2 * n);
  Tm.topLeftCorner(n, n).setIdentity();
  Tm.bottomLeftCorner(n, n) = -Gi * ph.E;
  Tm.bottomRightCorner(n, n) = Gi;
  tab.Qint = Tm.transpose() * W * Tm;
  tab.Qint = 0.5 * (tab.Qint + tab.Qint.transpose()).eval();
  return tab;
}

VectorXd state_weights(const TimeGrid& grid, int s) {
  const int R = grid.N() - s + 1;
  VectorXd w = VectorXd::Constant(R, grid.h());
  w(0) *= 0.5;
  w(R - 1) *= 0.5;
  return w;
}

namespace {

void CheckControl(const PropagatorTables& tab, int s,
                  const ControlTrajectory& u) {
  if (u.start != s || u.size() != tab.N() - s) {
    throw std::invalid_argument("control trajectory does not cover [s, T)");
  }
  for (const auto& v : u.values) {
    if (v.size() != tab.m) throw std::invalid_argument("control has wrong size");
  }
}

void CheckState(const PropagatorTables& tab, int s, const StateTrajectory& f) {
  if (f.start != s || f.size() != tab.N() - s + 1) {
    throw std::invalid_argument("state trajectory does not cover [s, T]");
  }
  for (const auto& v : f.values) {
    if (v.size() != tab.n) throw std::invalid_argument("state has wrong size");
  }
}

StateTrajectory ZeroState(int s, int N, int n) {
  StateTrajectory w;
  w.start = s;
  w.values.assign(N - s + 1, VectorXd::Zero(n));
  return w;
}

ControlTrajectory ZeroControl(int start, int count, int m) {
  ControlTrajectory u;
  u.start = start;
  u.values.assign(count, VectorXd::Zero(m));
  return u;
}

StateTrajectory ApplyToeplitz(const PropagatorTables& tab,
                              const std::vector<MatrixXd>& W, int s,
                              const ControlTrajectory& u) {
  CheckControl(tab, s, u);
  const int N = tab.N();
  StateTrajectory w = ZeroState(s, N, tab.n);
  for (int i = s + 1; i <= N; ++i) {
    VectorXd& wi = w.values[i - s];
    for (int j = s; j < i; ++j) wi.noalias() += W[i - j] * u.at(j);
  }
  return w;
}

ControlTrajectory ApplyToeplitzStar(const PropagatorTables& tab,
                                    const std::vector<MatrixXd>& W, int s,
                                    const StateTrajectory& f) {
  CheckState(tab, s, f);
  const int N = tab.N();
  const VectorXd om = state_weights(tab.grid, s);
  ControlTrajectory u = ZeroControl(s, N - s, tab.m);
  for (int j = s; j < N; ++j) {
    VectorXd& uj = u.values[j - s];
    for (int i = j + 1; i <= N; ++i) {
      uj.noalias() += (om(i - s) / tab.h()) * (W[i - j].transpose() * f.at(i));
    }
  }
  return u;
}

}  // namespace

StateTrajectory apply_L(const PropagatorTables& tab, int s,
                        const ControlTrajectory& u) {
  return ApplyToeplitz(tab, tab.WL, s, u);
}

StateTrajectory apply_H(const PropagatorTables& tab, int s,
                        const ControlTrajectory& u) {
  return ApplyToeplitz(tab, tab.WH, s, u);
}

StateTrajectory apply_K(const PropagatorTables& tab, int s,
                        const ControlTrajectory& eta) {
  if (s <= 0) throw std::invalid_argument("apply_K needs s_index >= 1");
  if (eta.start != 0 || eta.size() != s) {
    throw std::invalid_argument("history does not cover [0, s)");
  }
  const int N = tab.N();
  StateTrajectory w = ZeroState(s, N, tab.n);
  for (int i = s; i <= N; ++i) {
    for (int j = 0; j < s; ++j) {
      w.values[i - s].noalias() += tab.history_weight(i, s, j) * eta.at(j);
    }
  }
  return w;
}

ControlTrajectory apply_L_star(const PropagatorTables& tab, int s,
                               const StateTrajectory& f) {
  return ApplyToeplitzStar(tab, tab.WL, s, f);
}

ControlTrajectory apply_H_star(const PropagatorTables& tab, int s,
                               const StateTrajectory& f) {
  return ApplyToeplitzStar(tab, tab.WH, s, f);
}

ControlTrajectory apply_K_star(const PropagatorTables& tab, int s,
                               const StateTrajectory& f) {
  if (s <= 0) throw std::invalid_argument("apply_K_star needs s_index >= 1");
  CheckState(tab, s, f);
  const int N = tab.N();
  const VectorXd om = state_weights(tab.grid, s);
  ControlTrajectory eta = ZeroControl(0, s, tab.m);
  for (int j = 0; j < s; ++j) {
    for (int i = s; i <= N; ++i) {
      eta.values[j].noalias() += (om(i - s) / tab.h()) *
                                 (tab.history_weight(i, s, j).transpose() *
                                  f.at(i));
    }
  }
  return eta;
}

double control_inner(const TimeGrid& grid, const ControlTrajectory& u,
                     const ControlTrajectory& v) {
  if (u.start != v.start || u.size() != v.size()) {
    throw std::invalid_argument("control trajectories differ in range");
  }
  double r = 0.0;
  for (int j = 0; j < u.size(); ++j) r += u.values[j].dot(v.values[j]);
  return grid.h() * r;
}

double state_inner(const TimeGrid& grid, int s, const StateTrajectory& w,
                   const StateTrajectory& f) {
  const VectorXd om = state_weights(grid, s);
  if (w.size() != om.size() || f.size() != om.size()) {
    throw std::invalid_argument("state trajectories do not cover [s, T]");
  }
  double r = 0.0;
  for (int i = 0; i < w.size(); ++i) r += om(i) * w.values[i].dot(f.values[i]);
  return r;
}

namespace {

// Five-point Gauss-Legendre rule on [0, 1].
constexpr std::array<double, 5> kGaussX = {
    0.04691007703066800, 0.23076534494715845, 0.5, 0.76923465505284155,
    0.95308992296933200};
constexpr std::array<double, 5> kGaussW = {
    0.11846344252809454, 0.23931433524968324, 0.28444444444444444,
    0.23931433524968324, 0.11846344252809454};

// Continuous-time adjoint machinery on a fine grid of spacing h/refine.
struct FineAdjoint {
  const ControlSystem& sys;
  const TimeGrid& grid;
  int s;
  int refine;
  double hf;
  int M;                     // fine intervals on [0, T]
  std::vector<VectorXd> g;   // g(σ) = ∫_σ^T e^{Aᵀ(t-σ)} f(t) dt at fine nodes
  std::vector<MatrixXd> kT;  // k(k·hf)ᵀ

  FineAdjoint(const ControlSystem& sys_, const TimeGrid& grid_, int s_,
              const StateTrajectory& f, int refine_)
      : sys(sys_), grid(grid_), s(s_), refine(refine_) {
    hf = grid.h() / refine;
    M = grid.N() * refine;
    const int n = sys.n();
    auto f_at = [&](double t) {
      // Linear interpolation of the node samples of f.
      double x = t / grid.h();
      int i = std::clamp(static_cast<int>(std::floor(x)), s, grid.N() - 1);
      double w = x - i;
      return VectorXd((1.0 - w) * f.at(i) + w * f.at(i + 1));
    };
    g.assign(M + 1, VectorXd::Zero(n));
    const MatrixXd Ef = semigroup_at(sys, hf).transpose();
    std::array<MatrixXd, 5> Eg;
    for (int q = 0; q < 5; ++q) {
      Eg[q] = semigroup_at(sys, kGaussX[q] * hf).transpose();
    }
    for (int k = M - 1; k >= s * refine; --k) {
      VectorXd acc = Ef * g[k + 1];
      for (int q = 0; q < 5; ++q) {
        acc += hf * kGaussW[q] * (Eg[q] * f_at((k + kGaussX[q]) * hf));
      }
      g[k] = acc;
    }
    for (int k = 0; k <= M; ++k) kT.push_back(sys.k(k * hf).transpose());
  }

  // ∫_{σ_a}^{σ_b} Bᵀ k(σ - σ_q)ᵀ g(σ) dσ by the fine trapezoid.
  VectorXd MemoryTail(int q, int a) const {
    VectorXd acc = VectorXd::Zero(sys.m());
    for (int k = a; k < M; ++k) {
      acc += 0.5 * hf *
             (sys.B.transpose() * (kT[k - q] * g[k] + kT[k + 1 - q] * g[k + 1]));
    }
    return acc;
  }

  // Interval averages over [t_j, t_{j+1}] of a fine-node function.
  template <typename F>
  ControlTrajectory Average(int start, int count, F value) const {
    ControlTrajectory u;
    u.start = start;
    for (int j = start; j < start + count; ++j) {
      VectorXd acc = VectorXd::Zero(sys.m());
      for (int k = j * refine; k < (j + 1) * refine; ++k) {
        acc += 0.5 * (value(k) + value(k + 1)) / refine;
      }
      u.values.push_back(acc);
    }
    return u;
  }
};

}  // namespace

ControlTrajectory apply_L_star_continuous(const ControlSystem& sys,
                                          const TimeGrid& grid, int s,
                                          const StateTrajectory& f,
                                          int refine) {
  FineAdjoint fa(sys, grid, s, f, refine);
  return fa.Average(s, grid.N() - s, [&](int k) {
    return VectorXd(sys.B.transpose() * fa.g[k]);
  });
}

ControlTrajectory apply_H_star_continuous(const ControlSystem& sys,
                                          const TimeGrid& grid, int s,
                                          const StateTrajectory& f,
                                          int refine) {
  // H*z(q) = ∫_q^T Bᵀ k(σ - q)ᵀ ∫_σ^T e^{Aᵀ(t-σ)} z(t) dt dσ.
  FineAdjoint fa(sys, grid, s, f, refine);
  return fa.Average(s, grid.N() - s, [&](int k) { return fa.MemoryTail(k, k); });
}

ControlTrajectory apply_K_star_continuous(const ControlSystem& sys,
                                          const TimeGrid& grid, int s,
                                          const StateTrajectory& f,
                                          int refine) {
  // 𝒦*z(q) = ∫_s^T Bᵀ k(σ - q)ᵀ ∫_σ^T e^{Aᵀ(t-σ)} z(t) dt dσ for q < s.
  if (s <= 0) throw std::invalid_argument("𝒦 adjoint needs s_index >= 1");
  FineAdjoint fa(sys, grid, s, f, refine);
  return fa.Average(0, s, [&](int k) { return fa.MemoryTail(k, s * refine); });
}

StateTrajectory mild_solution(const PropagatorTables& tab, const StatePoint& x0,
                              const ControlTrajectory& u) {
  const int s = x0.s_index, N = tab.N();
  x0.Validate(tab.n, tab.m);
  CheckControl(tab, s, u);
  StateTrajectory w = ZeroState(s, N, tab.n);
  for (int i = s; i <= N; ++i) {
    VectorXd wi = tab.semigroup[i - s] * x0.w0;
    for (int j = s; j < i; ++j) wi.noalias() += tab.input_weight(i, j) * u.at(j);
    for (int j = 0; j < s; ++j) {
      wi.noalias() += tab.history_weight(i, s, j) * x0.eta[j];
    }
    w.values[i - s] = wi;
  }
  return w;
}

void write_trajectory_csv(const std::string& path, const TimeGrid& grid,
                          const Trajectory& tr, char prefix) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  const int d = tr.values.empty() ? 0 : static_cast<int>(tr.values[0].size());
  out << "t";
  for (int c = 1; c <= d; ++c) out << "," << prefix << "_" << c;
  out << "\n";
  for (int k = 0; k < tr.size(); ++k) {
    out << grid.t(tr.start + k);
    for (int c = 0; c < d; ++c) out << "," << tr.values[k](c);
    out << "\n";
  }
}

}  // namespace memlq
