#include "memlq/openloop.h"

#include <stdexcept>

namespace memlq {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd apply_qbar(const PropagatorTables& tab, int s, const MatrixXd& X) {
  const int n = tab.n, N = tab.N();
  if (X.rows() != (N - s + 1) * n) {
    throw std::invalid_argument("apply_qbar: row count mismatch");
  }
  MatrixXd Y = MatrixXd::Zero(X.rows(), X.cols());
  for (int k = 0; k < N - s; ++k) {
    Y.middleRows(k * n, 2 * n).noalias() += tab.Qint * X.middleRows(k * n, 2 * n);
  }
  return Y;
}

MatrixXd control_to_state(const PropagatorTables& tab, int s) {
  const int n = tab.n, m = tab.m, N = tab.N();
  MatrixXd G = MatrixXd::Zero((N - s + 1) * n, (N - s) * m);
  for (int i = s + 1; i <= N; ++i) {
    for (int j = s; j < i; ++j) {
      G.block((i - s) * n, (j - s) * m, n, m) = tab.input_weight(i, j);
    }
  }
  return G;
}

double cost_eval(const PropagatorTables& tab, const StatePoint& x0,
                 const ControlTrajectory& u) {
  const StateTrajectory w = mild_solution(tab, x0, u);
  const int n = tab.n;
  double J = 0.0;
  VectorXd z(2 * n);
  for (int k = 0; k + 1 < w.size(); ++k) {
    z << w.values[k], w.values[k + 1];
    J += z.dot(tab.Qint * z);
  }
  double uu = 0.0;
  for (const auto& v : u.values) uu += v.squaredNorm();
  return J + tab.h() * uu;
}

double QuadraticForm::Evaluate(const VectorXd& u) const {
  const double h = grid.h();
  return M_val + 2.0 * h * N_vec.dot(u) + h * u.dot(LambdaOp * u);
}

double QuadraticForm::lambda_min() const {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(LambdaOp, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

QuadraticForm assemble_quadratic_form(const PropagatorTables& tab,
                                      const StatePoint& x0) {
  const int s = x0.s_index, N = tab.N(), m = tab.m;
  if (s >= N) throw std::invalid_argument("initial time must be before T");
  QuadraticForm qf;
  qf.grid = tab.grid;
  qf.s = s;
  qf.m = m;
  qf.G = control_to_state(tab, s);
  const double h = tab.h();
  ControlTrajectory zero;
  zero.start = s;
  zero.values.assign(N - s, VectorXd::Zero(m));
  const VectorXd x_free = mild_solution(tab, x0, zero).Stacked();
  const VectorXd Qx = apply_qbar(tab, s, x_free);
  const MatrixXd QG = apply_qbar(tab, s, qf.G);
  qf.LambdaOp = MatrixXd::Identity(qf.G.cols(), qf.G.cols());
  qf.LambdaOp.noalias() += qf.G.transpose() * QG / h;
  qf.LambdaOp = 0.5 * (qf.LambdaOp + qf.LambdaOp.transpose()).eval();
  qf.N_vec = qf.G.transpose() * Qx / h;
  qf.M_val = x_free.dot(Qx);
  return qf;
}

ControlTrajectory solve_open_loop(const QuadraticForm& qf) {
  Eigen::LLT<MatrixXd> llt(qf.LambdaOp);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("LambdaOp factorization failed");
  }
  const VectorXd u = -llt.solve(qf.N_vec);
  return Trajectory::FromStacked(qf.s, u, qf.m);
}

PsiZTables build_psi_z(const PropagatorTables& tab, int s) {
  const int n = tab.n, m = tab.m, N = tab.N();
  if (s < 0 || s >= N) throw std::invalid_argument("build_psi_z: bad s");
  const double h = tab.h();
  const int R = N - s + 1;
  PsiZTables pz;
  pz.s = s;
  pz.Ec.resize(R * n, n);
  pz.Lc.resize(R * n, (s + 1) * m);
  for (int i = s; i <= N; ++i) {
    pz.Ec.middleRows((i - s) * n, n) = tab.semigroup[i - s];
    for (int p = 0; p <= s; ++p) {
      pz.Lc.block((i - s) * n, p * m, n, m) = tab.lambda.lambda(i, p, s);
    }
  }
  const MatrixXd G = control_to_state(tab, s);
  MatrixXd Lam = MatrixXd::Identity(G.cols(), G.cols());
  Lam.noalias() += G.transpose() * apply_qbar(tab, s, G) / h;
  Eigen::LLT<MatrixXd> llt(Lam);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("LambdaOp factorization failed");
  }
  pz.psi1c = -llt.solve(G.transpose() * apply_qbar(tab, s, pz.Ec) / h);
  pz.psi2c = -llt.solve(G.transpose() * apply_qbar(tab, s, pz.Lc) / h);
  pz.Z1c = pz.Ec + G * pz.psi1c;
  pz.Z2c = pz.Lc + G * pz.psi2c;
  for (int j = s; j < N; ++j) {
    pz.psi1.push_back(pz.psi1c.middleRows((j - s) * m, m));
    pz.psi2.push_back(pz.psi2c.middleRows((j - s) * m, m));
  }
  for (int i = s; i <= N; ++i) {
    pz.Z1.push_back(pz.Z1c.middleRows((i - s) * n, n));
    pz.Z2.push_back(pz.Z2c.middleRows((i - s) * n, n));
  }
  return pz;
}

namespace {

// Σ_l (h/2)(X[l] + X[l+1]) η_l over history steps, X given in m-wide blocks.
VectorXd HistoryIntegral(const MatrixXd& X, const StatePoint& x0, int m,
                         double h) {
  VectorXd r = VectorXd::Zero(X.rows());
  for (int l = 0; l < x0.s_index; ++l) {
    r.noalias() += 0.5 * h *
                   (X.middleCols(l * m, m) + X.middleCols((l + 1) * m, m)) *
                   x0.eta[l];
  }
  return r;
}

}  // namespace

ControlTrajectory psi_z_control(const PsiZTables& pz, const TimeGrid& grid,
                                const StatePoint& x0, int m) {
  ControlTrajectory u;
  u.start = pz.s;
  for (std::size_t k = 0; k < pz.psi1.size(); ++k) {
    u.values.push_back(pz.psi1[k] * x0.w0 +
                       HistoryIntegral(pz.psi2[k], x0, m, grid.h()));
  }
  return u;
}

StateTrajectory psi_z_state(const PsiZTables& pz, const TimeGrid& grid,
                            const StatePoint& x0, int m) {
  StateTrajectory w;
  w.start = pz.s;
  for (std::size_t k = 0; k < pz.Z1.size(); ++k) {
    w.values.push_back(pz.Z1[k] * x0.w0 +
                       HistoryIntegral(pz.Z2[k], x0, m, grid.h()));
  }
  return w;
}

OpenLoopResult solve_open_loop(const PropagatorTables& tab,
                               const StatePoint& x0) {
  const QuadraticForm qf = assemble_quadratic_form(tab, x0);
  OpenLoopResult r;
  r.u = solve_open_loop(qf);
  r.w = mild_solution(tab, x0, r.u);
  r.cost = cost_eval(tab, x0, r.u);
  r.lambda_min = qf.lambda_min();
  return r;
}

}  // namespace memlq
