#include "memlq/harness.h"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "memlq/closedloop.h"
#include "memlq/openloop.h"
#include "memlq/propagator.h"

namespace memlq {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kTiny = 1e-12;

double RelGap(double ref, double x) {
  return std::abs(ref - x) / std::max(std::abs(ref), kTiny);
}

double SupDiff(const Trajectory& a, const Trajectory& b) {
  double r = 0.0;
  for (int k = 0; k < a.size(); ++k) {
    r = std::max(r, (a.values[k] - b.values[k]).cwiseAbs().maxCoeff());
  }
  return r;
}

double SupNorm(const Trajectory& a) {
  double r = 0.0;
  for (const auto& v : a.values) r = std::max(r, v.cwiseAbs().maxCoeff());
  return r;
}

double MaxAbs(const RiccatiTriplet& t) {
  double r = 0.0;
  for (const auto& L : t.levels) {
    r = std::max({r, L.P0.cwiseAbs().maxCoeff(), L.P1.cwiseAbs().maxCoeff(),
                  L.P2.cwiseAbs().maxCoeff()});
  }
  return r;
}

bool FinalExact(const RiccatiTriplet& t) {
  const auto& L = t.levels.back();
  return (L.P0.array() == 0.0).all() && (L.P1.array() == 0.0).all() &&
         (L.P2.array() == 0.0).all();
}

struct Structure {
  double p0_asym{0.0};
  double p0_min_eig{INFINITY};
  double p2_asym{0.0};
};

void Accumulate(const RiccatiTriplet& t, Structure& st) {
  for (const auto& L : t.levels) {
    st.p0_asym = std::max(st.p0_asym,
                          (L.P0 - L.P0.transpose()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (L.P0 + L.P0.transpose()),
                                               Eigen::EigenvaluesOnly);
    st.p0_min_eig = std::min(st.p0_min_eig, es.eigenvalues()(0));
    st.p2_asym = std::max(st.p2_asym,
                          (L.P2 - L.P2.transpose()).cwiseAbs().maxCoeff());
  }
}

std::string Fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << std::scientific << v;
  return os.str();
}

}  // namespace

bool refines(double coarse, double fine, double ratio, double floor) {
  return fine <= floor || fine <= ratio * coarse;
}

LevelMetrics measure_level(const ControlSystem& sys, int N,
                           const std::vector<InitialSpec>& initial,
                           const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  LevelMetrics lm;
  lm.N = N;
  const TimeGrid grid(sys.T, N);
  const PropagatorTables tab = build_tables(sys, grid);
  const RiccatiTriplet v1 = riccati_by_quadrature(tab, RiccatiMethod::kQuadratureV1);
  const RiccatiTriplet v2 = riccati_by_quadrature(tab, RiccatiMethod::kQuadratureV2);
  const RiccatiTriplet bw = riccati_backward(sys, tab);
  PicardOptions po;
  po.window = cfg.window;
  po.tol = cfg.tol;
  po.max_iter = cfg.max_iter;
  const PicardResult pic = riccati_picard(sys, tab, po);
  lm.picard_windows = pic.windows;

  lm.d_v1_v2 = sup_distance(v1, v2);
  lm.p1_route_gap = v2.p1_route_gap;
  lm.d_v2_backward = sup_distance(v2, bw);
  lm.d_v2_picard = sup_distance(v2, pic.triplet);
  lm.d_backward_picard = sup_distance(bw, pic.triplet);
  lm.triplet_scale = MaxAbs(v2);
  lm.residual_backward = dre_residual(sys, tab, bw);
  lm.final_exact = FinalExact(v1) && FinalExact(v2) && FinalExact(bw) &&
                   FinalExact(pic.triplet);
  Structure st;
  for (const auto* t : {&v1, &v2, &bw, &pic.triplet}) Accumulate(*t, st);
  lm.p0_asymmetry = st.p0_asym;
  lm.p0_min_eig = st.p0_min_eig;
  lm.p2_asymmetry = st.p2_asym;

  const GainTables gains = build_gains(sys, v2);
  RunConfig local = cfg;
  local.sys = sys;
  for (const auto& spec : initial) {
    const StatePoint x0 = local.state_point(spec, grid);
    const OpenLoopResult ol = solve_open_loop(tab, x0);
    const FeedbackRun fb = simulate_closed_loop(tab, gains, x0);
    const double scale = std::max(SupNorm(ol.u), kTiny);
    lm.feedback_gap = std::max(lm.feedback_gap, SupDiff(ol.u, fb.u) / scale);
    const double cost_fb = cost_eval(tab, x0, fb.u);
    if (cost_fb < ol.cost * (1.0 - 1e-12) - kTiny) lm.feedback_cost_ok = false;
    lm.cost_gap_backward = std::max(
        lm.cost_gap_backward, RelGap(ol.cost, optimal_cost_form(bw, grid, x0)));
    lm.cost_gap_quadrature = std::max(
        lm.cost_gap_quadrature, RelGap(ol.cost, optimal_cost_form(v2, grid, x0)));
  }
  lm.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                   .count();
  return lm;
}

std::vector<CheckResult> run_verify(const RunConfig& cfg) {
  std::vector<CheckResult> out;
  auto add = [&](std::string name, bool pass, std::string detail) {
    out.push_back({std::move(name), pass, std::move(detail)});
  };
  const ControlSystem& sys = cfg.sys;
  const TimeGrid grid = cfg.grid();
  const int N = grid.N(), n = sys.n(), m = sys.m();
  std::mt19937 rng(cfg.seed);
  std::normal_distribution<double> normal;
  auto random_traj = [&](int start, int count, int dim) {
    Trajectory t;
    t.start = start;
    for (int k = 0; k < count; ++k) {
      t.values.push_back(VectorXd::NullaryExpr(dim, [&] { return normal(rng); }));
    }
    return t;
  };

  // model
  if (sys.eigen) {
    const auto& V = sys.eigen->eigenvectors;
    const double err =
        (V * sys.eigen->eigenvalues.asDiagonal() * V.transpose() - sys.A).norm() /
        std::max(sys.A.norm(), kTiny);
    add("model.eigen_reconstruction", err <= 1e-12, Fmt(err));
  }
  {
    const MatrixXd E = (sys.A * grid.h()).exp();
    const MatrixXd K = sys.k(grid.h());
    const double err = (E * K - K * E).norm();
    add("model.kernel_commutes", err <= 1e-10, Fmt(err));
  }
  if (cfg.model_kind == "heat") {
    double lo = INFINITY, hi = 0.0;
    for (int k = 1; k <= n; ++k) {
      const double r = std::abs(sys.B(k - 1, 0)) / k;
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    add("model.input_growth_linear", lo > 0.0 && hi / lo < 1.0 + 1e-12,
        "|B_k|/k in [" + Fmt(lo) + ", " + Fmt(hi) + "]");
  }

  // propagator
  const PropagatorTables tab = build_tables(sys, grid);
  {
    double err = 0.0;
    for (int i = 0; i <= N; ++i) {
      for (int j = 0; i + j <= N; ++j) {
        const double scale = std::max(1.0, tab.semigroup[i + j].norm());
        err = std::max(err, (tab.semigroup[i + j] -
                             tab.semigroup[i] * tab.semigroup[j]).norm() / scale);
      }
    }
    add("propagator.semigroup_law", err <= 1e-10, Fmt(err));
  }
  {
    bool exact = true;
    for (int s = 0; s <= N && exact; ++s) {
      for (int q = 0; q <= s && exact; ++q) {
        for (int i = s; i + 1 <= N && exact; ++i) {
          exact = (tab.lambda.lambda(i, q, s).array() ==
                   tab.lambda.lambda(i + 1, q + 1, s + 1).array()).all();
        }
      }
    }
    add("propagator.lambda_translation", exact, exact ? "exact" : "mismatch");
  }
  {
    const int s = std::max(1, N / 4);
    const Trajectory u = random_traj(s, N - s, m);
    const Trajectory f = random_traj(s, N - s + 1, n);
    const Trajectory eta = random_traj(0, s, m);
    auto rel = [](double a, double b) {
      return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
    };
    const double eL = rel(state_inner(grid, s, apply_L(tab, s, u), f),
                          control_inner(grid, u, apply_L_star(tab, s, f)));
    const double eH = rel(state_inner(grid, s, apply_H(tab, s, u), f),
                          control_inner(grid, u, apply_H_star(tab, s, f)));
    const double eK = rel(state_inner(grid, s, apply_K(tab, s, eta), f),
                          control_inner(grid, eta, apply_K_star(tab, s, f)));
    const double e = std::max({eL, eH, eK});
    add("propagator.adjoint_identities", e <= 1e-12,
        "L " + Fmt(eL) + ", H " + Fmt(eH) + ", K " + Fmt(eK));
  }

  // openloop, closedloop
  std::vector<StatePoint> points;
  for (const auto& spec : cfg.initial) points.push_back(cfg.state_point(spec));
  for (const auto& x0 : points) {
    const std::string tag = "[s=" + std::to_string(x0.s_index) + "]";
    const QuadraticForm qf = assemble_quadratic_form(tab, x0);
    const double lmin = qf.lambda_min();
    add("openloop.lambda_floor" + tag, lmin >= 1.0 - 1e-10, Fmt(lmin));
    const ControlTrajectory u_hat = solve_open_loop(qf);
    const double J = cost_eval(tab, x0, u_hat);
    {
      const Trajectory u = random_traj(x0.s_index, N - x0.s_index, m);
      const double a = qf.Evaluate(u.Stacked()), b = cost_eval(tab, x0, u);
      const double e = std::abs(a - b) / std::max(1.0, std::abs(b));
      add("openloop.quadratic_form" + tag, e <= 1e-10, Fmt(e));
    }
    {
      bool ok = true;
      double worst = INFINITY;
      for (int k = 0; k < 20; ++k) {
        Trajectory dv = random_traj(x0.s_index, N - x0.s_index, m);
        const double amp = std::pow(10.0, -3.0 + 3.0 * k / 19.0);
        Trajectory up = u_hat;
        for (int j = 0; j < up.size(); ++j) up.values[j] += amp * dv.values[j];
        const double dJ = cost_eval(tab, x0, up) - J;
        const double floor = control_inner(grid, dv, dv) * amp * amp;
        worst = std::min(worst, dJ / floor);
        if (!(dJ >= (1.0 - 1e-6) * floor)) ok = false;
      }
      add("openloop.optimality" + tag, ok,
          "min (J(u+dv)-J(u))/|dv|^2 = " + Fmt(worst));
    }
    {
      const PsiZTables pz = build_psi_z(tab, x0.s_index);
      const double eu = SupDiff(psi_z_control(pz, grid, x0, m), u_hat) /
                        std::max(SupNorm(u_hat), kTiny);
      const StateTrajectory w_hat = mild_solution(tab, x0, u_hat);
      const double ew = SupDiff(psi_z_state(pz, grid, x0, m), w_hat) /
                        std::max(SupNorm(w_hat), kTiny);
      add("openloop.representation" + tag, eu <= 1e-8 && ew <= 1e-8,
          "control " + Fmt(eu) + ", state " + Fmt(ew));
    }
    if (x0.s_index + 1 < N) {
      const int sp = x0.s_index + (N - x0.s_index) / 2;
      const DpReport dp = dp_consistency_check(tab, x0, sp);
      add("closedloop.dp_consistency" + tag, dp.distance <= 1e-6,
          Fmt(dp.distance));
    }
  }

  // riccati, closedloop, via the shared level measurement
  try {
    const LevelMetrics lm = measure_level(sys, N, cfg.initial, cfg);
    const double tol = std::max(1e-2, 10 * cfg.tol);
    add("riccati.p0_symmetric_psd",
        lm.p0_asymmetry <= 1e-10 && lm.p0_min_eig >= -1e-10,
        "asym " + Fmt(lm.p0_asymmetry) + ", min eig " + Fmt(lm.p0_min_eig));
    add("riccati.p2_transpose", lm.p2_asymmetry <= 1e-10, Fmt(lm.p2_asymmetry));
    add("riccati.final_conditions", lm.final_exact,
        lm.final_exact ? "bitwise zero" : "nonzero");
    add("riccati.v1_v2", lm.d_v1_v2 <= tol, Fmt(lm.d_v1_v2));
    add("riccati.p1_routes", lm.p1_route_gap <= tol, Fmt(lm.p1_route_gap));
    add("riccati.v2_backward", lm.d_v2_backward <= tol, Fmt(lm.d_v2_backward));
    add("riccati.v2_picard", lm.d_v2_picard <= tol, Fmt(lm.d_v2_picard));
    add("riccati.backward_picard", lm.d_backward_picard <= tol,
        Fmt(lm.d_backward_picard));
    add("riccati.picard_windows", !lm.picard_windows.empty(),
        std::to_string(lm.picard_windows.size()) + " windows");
    add("riccati.cost_identity_quadrature", lm.cost_gap_quadrature <= 1e-8,
        Fmt(lm.cost_gap_quadrature));
    add("riccati.cost_identity_backward", lm.cost_gap_backward <= 2e-2,
        Fmt(lm.cost_gap_backward));
    const auto& r = lm.residual_backward.max;
    add("riccati.dre_residual_finite",
        std::isfinite(r[0]) && std::isfinite(r[1]) && std::isfinite(r[2]),
        Fmt(r[0]) + ", " + Fmt(r[1]) + ", " + Fmt(r[2]));
    double cells = 0.0;
    for (int i = 0; i <= N; ++i) cells += double(i + 1) * (i + 1);
    add("riccati.p2_storage", true,
        "8·m²·Σ(i+1)² = " + std::to_string(static_cast<long long>(8.0 * m * m * cells)) +
            " bytes per triplet");
    add("closedloop.feedback_gap", lm.feedback_gap <= 5e-2, Fmt(lm.feedback_gap));
    add("closedloop.feedback_cost_not_below_optimum", lm.feedback_cost_ok,
        lm.feedback_cost_ok ? "ok" : "feedback cost below optimum");
  } catch (const std::exception& e) {
    add("riccati.solvers", false, e.what());
  }
  return out;
}

std::string run_convergence(const RunConfig& cfg, const std::vector<int>& levels) {
  if (levels.empty()) throw std::invalid_argument("convergence needs levels");
  for (std::size_t k = 1; k < levels.size(); ++k) {
    if (levels[k] <= levels[k - 1] || levels[k] % levels[k - 1] != 0) {
      throw std::invalid_argument("levels must increase, each dividing the next");
    }
  }
  const std::vector<std::string> cols = {
      "feedback_gap",  "cost_identity_gap", "d_v1_v2",
      "d_v2_backward", "d_v2_picard",       "d_backward_picard",
      "residual_eq1",  "residual_eq2",      "residual_eq3"};
  std::ostringstream os;
  os << std::setprecision(6) << std::scientific;
  os << "N";
  for (const auto& c : cols) os << "," << c;
  for (const auto& c : cols) os << ",ratio_" << c;
  os << "\n";
  std::vector<double> prev;
  for (int N : levels) {
    const LevelMetrics lm = measure_level(cfg.sys, N, cfg.initial, cfg);
    const std::vector<double> v = {
        lm.feedback_gap,  lm.cost_gap_backward, lm.d_v1_v2,
        lm.d_v2_backward, lm.d_v2_picard,       lm.d_backward_picard,
        lm.residual_backward.max[0], lm.residual_backward.max[1],
        lm.residual_backward.max[2]};
    os << N;
    for (double x : v) os << "," << x;
    for (std::size_t c = 0; c < v.size(); ++c) {
      os << ",";
      if (!prev.empty()) os << (prev[c] > 0.0 ? v[c] / prev[c] : 0.0);
    }
    os << "\n";
    prev = v;
  }
  return os.str();
}

nlohmann::json checks_to_json(const std::vector<CheckResult>& checks) {
  nlohmann::json arr = nlohmann::json::array();
  bool all = true;
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.detail}});
    all = all && c.pass;
  }
  return {{"checks", arr}, {"pass", all}};
}

}  // namespace memlq
