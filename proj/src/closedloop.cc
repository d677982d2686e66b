#include "memlq/closedloop.h"

#include <stdexcept>

#include "memlq/openloop.h"

namespace memlq {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// ∫_0^{t_i} FeedB(t_i, p) θ(p) dp, θ held per step, FeedB linear in p.
VectorXd History(const GainTables& g, int i, const std::vector<VectorXd>& theta,
                 int m, double h) {
  VectorXd r = VectorXd::Zero(m);
  const MatrixXd& F = g.FeedB[i];
  for (int j = 0; j < i; ++j) {
    r.noalias() += 0.5 * h *
                   (F.middleCols(j * m, m) + F.middleCols((j + 1) * m, m)) *
                   theta[j];
  }
  return r;
}

}  // namespace

FeedbackRun simulate_closed_loop(const PropagatorTables& tab,
                                 const GainTables& gains,
                                 const StatePoint& x0) {
  const int s = x0.s_index, N = tab.N(), m = tab.m;
  const double h = tab.h();
  x0.Validate(tab.n, m);
  if (gains.N() != N) throw std::invalid_argument("gains built on another grid");
  FeedbackRun run;
  run.u.start = s;
  run.w.start = s;
  run.theta = x0.eta;
  run.w.values.push_back(x0.w0);
  for (int i = s; i < N; ++i) {
    // w_{i+1} = base + W(i+1, i) u_i.
    VectorXd base = tab.semigroup[i + 1 - s] * x0.w0;
    for (int j = s; j < i; ++j) {
      base.noalias() += tab.input_weight(i + 1, j) * run.u.at(j);
    }
    for (int j = 0; j < s; ++j) {
      base.noalias() += tab.history_weight(i + 1, s, j) * x0.eta[j];
    }
    const MatrixXd Wi = tab.input_weight(i + 1, i);

    const VectorXd state_i = -gains.FeedA[i] * run.w.values.back();
    const VectorXd hist_i = -History(gains, i, run.theta, m, h);
    run.state_term.push_back(state_i);
    run.history_term.push_back(hist_i);

    // law(t_{i+1}) = b0 + b1 u_i.
    run.theta.push_back(VectorXd::Zero(m));
    const VectorXd b0 = -gains.FeedA[i + 1] * base -
                        History(gains, i + 1, run.theta, m, h);
    const MatrixXd& F = gains.FeedB[i + 1];
    const MatrixXd b1 =
        -gains.FeedA[i + 1] * Wi -
        0.5 * h * (F.middleCols(i * m, m) + F.middleCols((i + 1) * m, m));
    const MatrixXd M = MatrixXd::Identity(m, m) - 0.5 * b1;
    const VectorXd ui = M.partialPivLu().solve(0.5 * (state_i + hist_i + b0));
    if (!ui.allFinite()) {
      throw std::runtime_error("simulate_closed_loop: nonfinite control");
    }
    run.theta.back() = ui;
    run.u.values.push_back(ui);
    run.w.values.push_back(base + Wi * ui);
  }
  run.state_term.push_back(-gains.FeedA[N] * run.w.values.back());
  run.history_term.push_back(-History(gains, N, run.theta, m, h));
  run.w.CheckFinite();
  return run;
}

DpReport dp_consistency_check(const PropagatorTables& tab,
                              const StatePoint& x0, int s_prime) {
  const int s = x0.s_index, N = tab.N();
  if (s_prime < s || s_prime >= N) {
    throw std::invalid_argument("dp_consistency_check needs s <= s' < T");
  }
  const OpenLoopResult first = solve_open_loop(tab, x0);
  StatePoint x1;
  x1.s_index = s_prime;
  x1.w0 = first.w.at(s_prime);
  x1.eta = x0.eta;
  for (int j = s; j < s_prime; ++j) x1.eta.push_back(first.u.at(j));
  const OpenLoopResult second = solve_open_loop(tab, x1);
  DpReport r;
  for (int j = s_prime; j < N; ++j) {
    r.distance = std::max(
        r.distance, (first.u.at(j) - second.u.at(j)).cwiseAbs().maxCoeff());
    r.scale = std::max(r.scale, first.u.at(j).cwiseAbs().maxCoeff());
  }
  return r;
}

}  // namespace memlq
