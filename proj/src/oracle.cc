#include "memlq/oracle.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

#include "memlq/openloop.h"

namespace memlq::oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

ControlTrajectory brute_force_minimize(const PropagatorTables& tab,
                                       const StatePoint& x0,
                                       const OracleConfig& cfg) {
  const int s = x0.s_index, m = tab.m;
  const int D = (tab.N() - s) * m;
  if (D > 2000) throw std::invalid_argument("brute force: too many unknowns");
  auto J = [&](const VectorXd& u) {
    return cost_eval(tab, x0, Trajectory::FromStacked(s, u, m));
  };
  // J is quadratic, so second differences are exact and a unit step keeps
  // the rounding error smallest relative to the curvature.
  const double d = 1.0;
  const double J0 = J(VectorXd::Zero(D));
  VectorXd Jp(D), Jm(D);
  for (int i = 0; i < D; ++i) {
    VectorXd e = VectorXd::Zero(D);
    e(i) = d;
    Jp(i) = J(e);
    Jm(i) = J(-e);
  }
  MatrixXd H(D, D);
  VectorXd g(D);
  for (int i = 0; i < D; ++i) {
    g(i) = (Jp(i) - Jm(i)) / (2 * d);
    H(i, i) = (Jp(i) - 2 * J0 + Jm(i)) / (d * d);
    for (int k = i + 1; k < D; ++k) {
      VectorXd e = VectorXd::Zero(D);
      e(i) = d;
      e(k) = d;
      H(i, k) = H(k, i) = (J(e) - Jp(i) - Jp(k) + J0) / (d * d);
    }
  }
  const VectorXd u = H.ldlt().solve(-g);
  if ((H * u + g).norm() > cfg.qp_tol * std::max(1.0, g.norm())) {
    throw std::runtime_error("brute force: Hessian solve inaccurate");
  }
  return Trajectory::FromStacked(s, u, m);
}

std::vector<MatrixXd> classical_dre(const ControlSystem& sys,
                                    const TimeGrid& grid, DreScheme scheme) {
  if (!sys.kernel.is_zero()) {
    throw std::invalid_argument("classical_dre needs a zero memory kernel");
  }
  const int n = sys.n(), N = grid.N();
  const double h = grid.h();
  const MatrixXd& A = sys.A;
  const MatrixXd BBt = sys.B * sys.B.transpose();
  const MatrixXd CtC = sys.C.transpose() * sys.C;
  std::vector<MatrixXd> P(N + 1, MatrixXd::Zero(n, n));
  if (scheme == DreScheme::kHamiltonian) {
    // d/dτ [X; Y] = -H [X; Y] in reverse time with P = Y X⁻¹.
    MatrixXd H(2 * n, 2 * n);
    H << A, -BBt, -CtC, -A.transpose();
    const MatrixXd M = (-H * h).exp();
    for (int i = N - 1; i >= 0; --i) {
      const MatrixXd X = M.topLeftCorner(n, n) + M.topRightCorner(n, n) * P[i + 1];
      const MatrixXd Y =
          M.bottomLeftCorner(n, n) + M.bottomRightCorner(n, n) * P[i + 1];
      MatrixXd Pi = X.transpose().partialPivLu().solve(Y.transpose()).transpose();
      P[i] = 0.5 * (Pi + Pi.transpose());
    }
  } else {
    auto f = [&](const MatrixXd& X) {
      return MatrixXd(A.transpose() * X + X * A + CtC - X * BBt * X);
    };
    for (int i = N - 1; i >= 0; --i) {
      const MatrixXd k1 = f(P[i + 1]);
      const MatrixXd k2 = f(P[i + 1] + h * k1);
      P[i] = P[i + 1] + 0.5 * h * (k1 + k2);
    }
  }
  return P;
}

double scalar_riccati(double a, double b, double c, double T, double t) {
  if (b == 0.0) {
    // Linear: -p' = 2ap + c².
    if (a == 0.0) return c * c * (T - t);
    return c * c * (std::exp(2 * a * (T - t)) - 1.0) / (2 * a);
  }
  // Roots of b²p² - 2ap - c² = 0, then the Bernoulli form of the solution.
  const double disc = std::sqrt(a * a + b * b * c * c);
  const double pp = (a + disc) / (b * b);
  const double pm = (a - disc) / (b * b);
  if (c == 0.0) return 0.0;
  const double R = pp / pm;
  const double e = std::exp(b * b * (pp - pm) * (t - T));
  return (pp - pm * R * e) / (1.0 - R * e);
}

double exp_series(double x) {
  int k = 0;
  while (std::abs(x) > 0.5) {
    x *= 0.5;
    ++k;
  }
  double term = 1.0, sum = 1.0;
  for (int j = 1; j <= 30; ++j) {
    term *= x / j;
    sum += term;
  }
  for (int j = 0; j < k; ++j) sum *= sum;
  return sum;
}

double simpson(const std::function<double(double)>& f, double a, double b,
               int panels) {
  if (panels % 2) ++panels;
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

double dirichlet_eigenvalue_fd(int k, int M) {
  auto solve = [k](int pts) {
    const double dx = 1.0 / (pts + 1);
    MatrixXd L = MatrixXd::Zero(pts, pts);
    for (int i = 0; i < pts; ++i) {
      L(i, i) = 2.0 / (dx * dx);
      if (i + 1 < pts) L(i, i + 1) = L(i + 1, i) = -1.0 / (dx * dx);
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(L, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(k - 1);
  };
  // Second-order error in dx: combine grids with dx ratio close to 2.
  const double l1 = solve(M), l2 = solve(2 * M + 1);
  return (4.0 * l2 - l1) / 3.0;
}

double heat_input_coefficient(int k, int panels) {
  const double w = k * std::numbers::pi;
  const double D = simpson(
      [w](double x) { return x * std::sqrt(2.0) * std::sin(w * x); }, 0.0, 1.0,
      panels);
  return w * w * D;
}

}  // namespace memlq::oracle
