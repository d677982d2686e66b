#include "memlq/riccati.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/KroneckerProduct>

#include "memlq/openloop.h"

namespace memlq {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(RiccatiMethod method) {
  switch (method) {
    case RiccatiMethod::kQuadratureV1:
      return "quadrature-v1";
    case RiccatiMethod::kQuadratureV2:
      return "quadrature-v2";
    case RiccatiMethod::kBackward:
      return "backward";
    case RiccatiMethod::kPicard:
      return "picard";
  }
  return "unknown";
}

RiccatiMethod parse_riccati_method(const std::string& name) {
  if (name == "quadrature-v1") return RiccatiMethod::kQuadratureV1;
  if (name == "quadrature-v2") return RiccatiMethod::kQuadratureV2;
  if (name == "backward") return RiccatiMethod::kBackward;
  if (name == "picard") return RiccatiMethod::kPicard;
  throw std::invalid_argument("unknown Riccati method '" + name + "'");
}

RiccatiLevel RiccatiLevel::Zero(int n, int m, int i) {
  return {MatrixXd::Zero(n, n), MatrixXd::Zero(n, (i + 1) * m),
          MatrixXd::Zero((i + 1) * m, (i + 1) * m)};
}

RiccatiLevel RiccatiLevel::Truncated(int i, int m) const {
  const int w = (i + 1) * m;
  return {P0, P1.leftCols(w), P2.topLeftCorner(w, w)};
}

MatrixXd RiccatiTriplet::P1(int i, int p) const {
  if (p < 0 || p > i) throw std::out_of_range("P1: p must lie in [0, i]");
  return levels.at(i).P1.middleCols(p * m, m);
}

MatrixXd RiccatiTriplet::P2(int i, int p, int q) const {
  if (p < 0 || q < 0 || p > i || q > i) {
    throw std::out_of_range("P2: p, q must lie in [0, i]");
  }
  return levels.at(i).P2.block(q * m, p * m, m, m);
}

RiccatiTriplet RiccatiTriplet::Zero(int n, int m, int N, RiccatiMethod method) {
  RiccatiTriplet t;
  t.n = n;
  t.m = m;
  t.method = method;
  for (int i = 0; i <= N; ++i) t.levels.push_back(RiccatiLevel::Zero(n, m, i));
  return t;
}

double sup_distance(const RiccatiTriplet& a, const RiccatiTriplet& b) {
  if (a.N() != b.N() || a.n != b.n || a.m != b.m) {
    throw std::invalid_argument("sup_distance: triplets differ in shape");
  }
  double r = 0.0;
  for (int i = 0; i <= a.N(); ++i) {
    const auto& x = a.levels[i];
    const auto& y = b.levels[i];
    r = std::max(r, (x.P0 - y.P0).cwiseAbs().maxCoeff());
    r = std::max(r, (x.P1 - y.P1).cwiseAbs().maxCoeff());
    r = std::max(r, (x.P2 - y.P2).cwiseAbs().maxCoeff());
  }
  return r;
}

namespace {

// y += c·x, level-wise.
void Axpy(double c, const RiccatiLevel& x, RiccatiLevel& y) {
  y.P0 += c * x.P0;
  y.P1 += c * x.P1;
  y.P2 += c * x.P2;
}

double MaxAbsDiff(const RiccatiLevel& x, const RiccatiLevel& y) {
  return std::max({(x.P0 - y.P0).cwiseAbs().maxCoeff(),
                   (x.P1 - y.P1).cwiseAbs().maxCoeff(),
                   (x.P2 - y.P2).cwiseAbs().maxCoeff()});
}

bool AllFinite(const RiccatiLevel& x) {
  return x.P0.allFinite() && x.P1.allFinite() && x.P2.allFinite();
}

}  // namespace

BlockOperatorBundle::BlockOperatorBundle(const ControlSystem& sys,
                                         const PropagatorTables& tab)
    : n_(sys.n()),
      m_(sys.m()),
      A_(sys.A),
      B_(sys.B),
      CtC_(sys.C.transpose() * sys.C),
      KB_(tab.KB) {}

MatrixXd BlockOperatorBundle::KBRow(int i) const {
  MatrixXd R(n_, (i + 1) * m_);
  for (int p = 0; p <= i; ++p) R.middleCols(p * m_, m_) = KB_[i - p];
  return R;
}

MatrixXd BlockOperatorBundle::F0(const RiccatiLevel& P, int i) const {
  return B_.transpose() * P.P0 + P.P1.middleCols(i * m_, m_).transpose();
}

MatrixXd BlockOperatorBundle::F1(const RiccatiLevel& P, int i) const {
  return B_.transpose() * P.P1 + P.P2.middleRows(i * m_, m_);
}

RiccatiLevel BlockOperatorBundle::Q(int i) const {
  RiccatiLevel r = RiccatiLevel::Zero(n_, m_, i);
  r.P0 = CtC_;
  return r;
}

RiccatiLevel BlockOperatorBundle::Memory(const RiccatiLevel& P, int i) const {
  const MatrixXd K = KBRow(i);
  RiccatiLevel r;
  r.P0 = MatrixXd::Zero(n_, n_);
  r.P1 = P.P0 * K;
  const MatrixXd KtP1 = K.transpose() * P.P1;
  r.P2 = KtP1 + KtP1.transpose();
  return r;
}

RiccatiLevel BlockOperatorBundle::Quadratic(const RiccatiLevel& P, int i) const {
  const MatrixXd f0 = F0(P, i);
  const MatrixXd f1 = F1(P, i);
  return {f0.transpose() * f0, f0.transpose() * f1, f1.transpose() * f1};
}

RiccatiLevel BlockOperatorBundle::Evaluate(const RiccatiLevel& P, int i) const {
  RiccatiLevel r = Memory(P, i);
  r.P0 += CtC_;
  Axpy(-1.0, Quadratic(P, i), r);
  return r;
}

RiccatiTriplet riccati_by_quadrature(const PropagatorTables& tab,
                                     RiccatiMethod variant) {
  if (variant != RiccatiMethod::kQuadratureV1 &&
      variant != RiccatiMethod::kQuadratureV2) {
    throw std::invalid_argument("riccati_by_quadrature: v1 or v2 only");
  }
  const int n = tab.n, m = tab.m, N = tab.N();
  const double h = tab.h();
  RiccatiTriplet trip = RiccatiTriplet::Zero(n, m, N, variant);
  double gap = 0.0;
  for (int s = 0; s < N; ++s) {
    const PsiZTables pz = build_psi_z(tab, s);
    RiccatiLevel& L = trip.levels[s];
    const MatrixXd QZ2 = apply_qbar(tab, s, pz.Z2c);
    if (variant == RiccatiMethod::kQuadratureV1) {
      const MatrixXd QZ1 = apply_qbar(tab, s, pz.Z1c);
      L.P0 = pz.Z1c.transpose() * QZ1 + h * pz.psi1c.transpose() * pz.psi1c;
      L.P1 = pz.Z1c.transpose() * QZ2 + h * pz.psi1c.transpose() * pz.psi2c;
      L.P2 = pz.Z2c.transpose() * QZ2 + h * pz.psi2c.transpose() * pz.psi2c;
    } else {
      L.P0 = pz.Ec.transpose() * apply_qbar(tab, s, pz.Z1c);
      L.P1 = pz.Ec.transpose() * QZ2;
      L.P2 = pz.Lc.transpose() * QZ2;
      const MatrixXd P1v3 =
          pz.Z1c.transpose() * apply_qbar(tab, s, pz.Lc);
      gap = std::max(gap, (P1v3 - L.P1).cwiseAbs().maxCoeff());
    }
  }
  if (variant == RiccatiMethod::kQuadratureV2) trip.p1_route_gap = gap;
  return trip;
}

namespace {

// Exact propagators of the linear parts over one step h, with the matching
// φ-weights for the exponential trapezoid.
struct LinearParts {
  MatrixXd E1, p1, p2;  // for Aᵀ acting on P1
  MatrixXd Ek, k1, k2;  // for P ↦ AᵀP + PA acting on vec(P0)

  LinearParts(const MatrixXd& A, double h) {
    const int n = static_cast<int>(A.rows());
    PhiFunctions a = phi_functions(A.transpose(), h);
    E1 = a.E;
    p1 = a.phi1;
    p2 = a.phi2;
    const MatrixXd I = MatrixXd::Identity(n, n);
    MatrixXd Lk = Eigen::kroneckerProduct(I, A.transpose()).eval() +
                  Eigen::kroneckerProduct(A.transpose(), I).eval();
    PhiFunctions k = phi_functions(Lk, h);
    Ek = k.E;
    k1 = k.phi1;
    k2 = k.phi2;
  }

  static MatrixXd OnVec(const MatrixXd& K, const MatrixXd& P) {
    const int n = static_cast<int>(P.rows());
    VectorXd v = K * Eigen::Map<const VectorXd>(P.data(), n * n);
    return Eigen::Map<const MatrixXd>(v.data(), n, n);
  }
};

}  // namespace

RiccatiTriplet riccati_backward(const ControlSystem& sys,
                                const PropagatorTables& tab) {
  const int n = sys.n(), m = sys.m(), N = tab.N();
  const double h = tab.h();
  const BlockOperatorBundle bundle(sys, tab);
  const LinearParts lin(sys.A, h);
  RiccatiTriplet trip = RiccatiTriplet::Zero(n, m, N, RiccatiMethod::kBackward);
  for (int i = N - 1; i >= 0; --i) {
    const RiccatiLevel Nb = bundle.Evaluate(trip.levels[i + 1], i + 1)
                                .Truncated(i, m);
    const RiccatiLevel y = trip.levels[i + 1].Truncated(i, m);
    // Exponential Euler predictor.
    RiccatiLevel a;
    a.P0 = LinearParts::OnVec(lin.Ek, y.P0) + h * LinearParts::OnVec(lin.k1, Nb.P0);
    a.P1 = lin.E1 * y.P1 + h * lin.p1 * Nb.P1;
    a.P2 = y.P2 + h * Nb.P2;
    // Trapezoidal corrector on the coupling terms.
    RiccatiLevel d = bundle.Evaluate(a, i);
    Axpy(-1.0, Nb, d);
    RiccatiLevel& P = trip.levels[i];
    P.P0 = a.P0 + h * LinearParts::OnVec(lin.k2, d.P0);
    P.P1 = a.P1 + h * lin.p2 * d.P1;
    P.P2 = a.P2 + 0.5 * h * d.P2;
    if (!AllFinite(P)) {
      throw std::runtime_error("riccati_backward: nonfinite values, refine N");
    }
  }
  return trip;
}

namespace {

struct WindowOutcome {
  bool converged{false};
  int iterations{0};
  double contraction{0.0};
  std::vector<RiccatiLevel> levels;  // i0..i1
};

// Iterates the integral map on [t_i0, t_i1] with P(t_i1) held fixed.
WindowOutcome RunWindow(const BlockOperatorBundle& bundle,
                        const LinearParts& lin, const RiccatiLevel& end,
                        int i0, int i1, int m, double h,
                        const PicardOptions& opts) {
  const int w = i1 - i0;
  WindowOutcome out;
  std::vector<RiccatiLevel> cur(w + 1);
  for (int i = i0; i < i1; ++i) cur[i - i0] = end.Truncated(i, m);
  cur[w] = end;
  double prev = -1.0;
  std::vector<double> ratios;
  for (int it = 1; it <= opts.max_iter; ++it) {
    std::vector<RiccatiLevel> Nv(w + 1);
    for (int i = i0; i <= i1; ++i) Nv[i - i0] = bundle.Evaluate(cur[i - i0], i);
    std::vector<RiccatiLevel> next(w + 1);
    next[w] = end;
    for (int i = i1 - 1; i >= i0; --i) {
      const RiccatiLevel& y = next[i + 1 - i0];
      const RiccatiLevel Na = Nv[i + 1 - i0].Truncated(i, m);
      const RiccatiLevel& Nc = Nv[i - i0];
      RiccatiLevel& P = next[i - i0];
      P.P0 = LinearParts::OnVec(lin.Ek, y.P0.eval()) +
             h * LinearParts::OnVec(lin.k1 - lin.k2, Na.P0) +
             h * LinearParts::OnVec(lin.k2, Nc.P0);
      P.P1 = lin.E1 * y.P1.leftCols((i + 1) * m) +
             h * (lin.p1 - lin.p2) * Na.P1 + h * lin.p2 * Nc.P1;
      P.P2 = y.P2.topLeftCorner((i + 1) * m, (i + 1) * m) +
             0.5 * h * (Na.P2 + Nc.P2);
      if (!AllFinite(P)) {
        out.iterations = it;
        return out;
      }
    }
    double diff = 0.0;
    for (int i = i0; i < i1; ++i) {
      diff = std::max(diff, MaxAbsDiff(next[i - i0], cur[i - i0]));
    }
    cur = std::move(next);
    if (prev > 1e-13) ratios.push_back(diff / prev);
    prev = diff;
    if (diff < opts.tol) {
      out.converged = true;
      out.iterations = it;
      // The first ratio reflects the initial guess, not the map.
      for (std::size_t k = 1; k < ratios.size(); ++k) {
        out.contraction = std::max(out.contraction, ratios[k]);
      }
      out.levels = std::move(cur);
      return out;
    }
  }
  out.iterations = opts.max_iter;
  return out;
}

}  // namespace

PicardResult riccati_picard(const ControlSystem& sys,
                            const PropagatorTables& tab,
                            const PicardOptions& opts) {
  if (opts.window < 1) throw std::invalid_argument("Picard window must be >= 1");
  const int n = sys.n(), m = sys.m(), N = tab.N();
  const double h = tab.h();
  const BlockOperatorBundle bundle(sys, tab);
  const LinearParts lin(sys.A, h);
  PicardResult res;
  res.triplet = RiccatiTriplet::Zero(n, m, N, RiccatiMethod::kPicard);
  int i1 = N;
  while (i1 > 0) {
    int w = std::min(opts.window, i1);
    int best_w = 0;
    WindowOutcome best;
    while (true) {
      WindowOutcome r = RunWindow(bundle, lin, res.triplet.levels[i1], i1 - w,
                                  i1, m, h, opts);
      if (r.converged && r.contraction <= opts.max_contraction) {
        best_w = w;
        best = std::move(r);
        if (w == i1) break;
        w = std::min(2 * w, i1);
      } else if (best_w == 0) {
        if (w == 1) {
          throw std::runtime_error(
              "riccati_picard: no contracting window at t = " +
              std::to_string(tab.grid.t(i1)));
        }
        w = std::max(1, w / 2);
      } else {
        break;
      }
    }
    for (int i = i1 - best_w; i < i1; ++i) {
      res.triplet.levels[i] = std::move(best.levels[i - (i1 - best_w)]);
    }
    res.windows.push_back({i1 - best_w, i1, best.iterations, best.contraction});
    i1 -= best_w;
  }
  return res;
}

DreResidual dre_residual(const ControlSystem& sys, const PropagatorTables& tab,
                         const RiccatiTriplet& trip, double t_max) {
  const int m = sys.m(), N = tab.N();
  const double h = tab.h();
  if (trip.N() != N) throw std::invalid_argument("dre_residual: grid mismatch");
  const BlockOperatorBundle bundle(sys, tab);
  const MatrixXd& A = sys.A;
  DreResidual out;
  auto record = [&](int eq, double v, int i) {
    if (v > out.max[eq]) {
      out.max[eq] = v;
      out.node[eq] = i;
    }
  };
  for (int i = 1; i < N && tab.grid.t(i) <= t_max + 1e-12; ++i) {
    const RiccatiLevel& P = trip.levels[i];
    const RiccatiLevel Nl = bundle.Evaluate(P, i);
    const RiccatiLevel& up = trip.levels[i + 1];
    const RiccatiLevel& dn = trip.levels[i - 1];
    const MatrixXd R0 = (up.P0 - dn.P0) / (2 * h) + A.transpose() * P.P0 +
                        P.P0 * A + Nl.P0;
    record(0, R0.cwiseAbs().maxCoeff(), i);
    // Memory nodes p, q <= i - 1 have values on both neighbors.
    const int w = i * m;
    const MatrixXd R1 = (up.P1.leftCols(w) - dn.P1) / (2 * h) +
                        A.transpose() * P.P1.leftCols(w) + Nl.P1.leftCols(w);
    record(1, R1.cwiseAbs().maxCoeff(), i);
    const MatrixXd R2 = (up.P2.topLeftCorner(w, w) - dn.P2) / (2 * h) +
                        Nl.P2.topLeftCorner(w, w);
    record(2, R2.cwiseAbs().maxCoeff(), i);
  }
  return out;
}

GainTables build_gains(const ControlSystem& sys, const RiccatiTriplet& trip) {
  GainTables g;
  const MatrixXd Bt = sys.B.transpose();
  for (int i = 0; i <= trip.N(); ++i) {
    const RiccatiLevel& P = trip.levels[i];
    if (!AllFinite(P)) throw std::invalid_argument("build_gains: nonfinite");
    g.G0.push_back(Bt * P.P0);
    g.G1.push_back(Bt * P.P1);
    g.FeedA.push_back(g.G0.back() +
                      P.P1.middleCols(i * trip.m, trip.m).transpose());
    g.FeedB.push_back(g.G1.back() + P.P2.middleRows(i * trip.m, trip.m));
  }
  return g;
}

double optimal_cost_form(const RiccatiTriplet& trip, const TimeGrid& grid,
                         const StatePoint& x0) {
  const int s = x0.s_index, m = trip.m;
  const double h = grid.h();
  const RiccatiLevel& L = trip.levels.at(s);
  double v = x0.w0.dot(L.P0 * x0.w0);
  for (int j = 0; j < s; ++j) {
    const MatrixXd P1a =
        0.5 * (L.P1.middleCols(j * m, m) + L.P1.middleCols((j + 1) * m, m));
    v += 2.0 * h * x0.w0.dot(P1a * x0.eta[j]);
    for (int l = 0; l < s; ++l) {
      // Block (l, j) holds P₂(t_s, t_j, t_l); average the four corners.
      const MatrixXd P2a =
          0.25 * (L.P2.block(l * m, j * m, m, m) +
                  L.P2.block(l * m, (j + 1) * m, m, m) +
                  L.P2.block((l + 1) * m, j * m, m, m) +
                  L.P2.block((l + 1) * m, (j + 1) * m, m, m));
      v += h * h * x0.eta[l].dot(P2a * x0.eta[j]);
    }
  }
  return v;
}

}  // namespace memlq
