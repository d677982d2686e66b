#pragma once

#include <array>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "memlq/model.h"
#include "memlq/propagator.h"

namespace memlq {

enum class RiccatiMethod { kQuadratureV1, kQuadratureV2, kBackward, kPicard };
std::string to_string(RiccatiMethod method);
RiccatiMethod parse_riccati_method(const std::string& name);

/// The triplet at one node t_i. Memory arguments p, q run over nodes 0..i
/// and are packed in m-wide blocks:
///   P1 block p      = P₁(t_i, t_p)         (n×m)
///   P2 block (q, p) = P₂(t_i, t_p, t_q)    (m×m)
/// so the transpose relation P₂(t,p,q) = P₂(t,q,p)ᵀ makes P2 symmetric.
struct RiccatiLevel {
  Eigen::MatrixXd P0;
  Eigen::MatrixXd P1;
  Eigen::MatrixXd P2;

  static RiccatiLevel Zero(int n, int m, int i);
  /// Drops the memory blocks beyond node `i`.
  RiccatiLevel Truncated(int i, int m) const;
};

struct RiccatiTriplet {
  int n{0};
  int m{0};
  RiccatiMethod method{RiccatiMethod::kQuadratureV2};
  std::vector<RiccatiLevel> levels;  // t_0..t_N
  /// Largest gap between the two P₁ routes (quadrature v2 only).
  double p1_route_gap{std::numeric_limits<double>::quiet_NaN()};

  int N() const { return static_cast<int>(levels.size()) - 1; }
  const Eigen::MatrixXd& P0(int i) const { return levels.at(i).P0; }
  Eigen::MatrixXd P1(int i, int p) const;
  Eigen::MatrixXd P2(int i, int p, int q) const;

  static RiccatiTriplet Zero(int n, int m, int N, RiccatiMethod method);
};

/// Sup-norm distance over all stored entries.
double sup_distance(const RiccatiTriplet& a, const RiccatiTriplet& b);

/// The structured pieces of the block system: 𝒬, the memory couplings
/// P𝒦₁ + 𝒦₂P and the quadratic term Pℐ₁ℬℐ₂P, acting level by level. In
/// reverse time τ = T - t the system reads
///   dP0/dτ = AᵀP0 + P0A + N0,  dP1/dτ = AᵀP1 + N1,  dP2/dτ = N2
/// with N = 𝒬 + memory - quadratic.
class BlockOperatorBundle {
 public:
  BlockOperatorBundle(const ControlSystem& sys, const PropagatorTables& tab);

  /// Feedback gains at node i: F0 = BᵀP0 + P₁(t,t)ᵀ (m×n) and
  /// F1 block p = BᵀP₁(t,p) + P₂(t,p,t) (m×(i+1)m).
  Eigen::MatrixXd F0(const RiccatiLevel& P, int i) const;
  Eigen::MatrixXd F1(const RiccatiLevel& P, int i) const;

  RiccatiLevel Q(int i) const;
  RiccatiLevel Memory(const RiccatiLevel& P, int i) const;
  RiccatiLevel Quadratic(const RiccatiLevel& P, int i) const;
  /// 𝒬 + memory - quadratic.
  RiccatiLevel Evaluate(const RiccatiLevel& P, int i) const;

  /// Blocks k(t_i - t_p) B for p = 0..i (n×(i+1)m).
  Eigen::MatrixXd KBRow(int i) const;

  int n() const { return n_; }
  int m() const { return m_; }

 private:
  int n_, m_;
  Eigen::MatrixXd A_, B_, CtC_;
  std::vector<Eigen::MatrixXd> KB_;
};

/// v1: ∫ Z*C*CZ + ψ*ψ; v2: the semigroup/λ forms, also filling the second
/// P₁ route and recording its gap.
RiccatiTriplet riccati_by_quadrature(const PropagatorTables& tab,
                                     RiccatiMethod variant);

/// Exponential second-order integration backward from P(T) = 0: the linear
/// A-terms are propagated exactly, the couplings by a trapezoidal corrector.
RiccatiTriplet riccati_backward(const ControlSystem& sys,
                                const PropagatorTables& tab);

struct PicardOptions {
  int window{4};
  double tol{1e-10};
  int max_iter{200};
  double max_contraction{0.5};
};

struct PicardWindow {
  int start{0};
  int end{0};
  int iterations{0};
  double contraction{0.0};
};

struct PicardResult {
  RiccatiTriplet triplet;
  std::vector<PicardWindow> windows;
};

/// Fixed-point iteration of the integral form, marched over windows from T
/// backwards. Window lengths start at `window`, halve on failure and double
/// while the measured contraction stays below `max_contraction`.
PicardResult riccati_picard(const ControlSystem& sys,
                            const PropagatorTables& tab,
                            const PicardOptions& opts = {});

/// Max |residual| per equation at interior nodes, with central differences
/// in t and the final condition P(T) = 0 as the right neighbor of t_{N-1}.
/// Nodes later than `t_max` are skipped when it is given.
struct DreResidual {
  std::array<double, 3> max{0.0, 0.0, 0.0};
  std::array<int, 3> node{-1, -1, -1};
};
DreResidual dre_residual(const ControlSystem& sys, const PropagatorTables& tab,
                         const RiccatiTriplet& trip,
                         double t_max = std::numeric_limits<double>::infinity());

struct GainTables {
  std::vector<Eigen::MatrixXd> G0;     // BᵀP0
  std::vector<Eigen::MatrixXd> G1;     // BᵀP1, blocks p
  std::vector<Eigen::MatrixXd> FeedA;  // BᵀP0 + P₁(t,t)ᵀ
  std::vector<Eigen::MatrixXd> FeedB;  // BᵀP1 + P₂(t,p,t), blocks p

  int N() const { return static_cast<int>(FeedA.size()) - 1; }
};
GainTables build_gains(const ControlSystem& sys, const RiccatiTriplet& trip);

/// (P(s)X0, X0) with the history integrals taken by the trapezoid in p, q.
double optimal_cost_form(const RiccatiTriplet& trip, const TimeGrid& grid,
                         const StatePoint& x0);

nlohmann::json triplet_to_json(const RiccatiTriplet& trip);
RiccatiTriplet triplet_from_json(const nlohmann::json& j);
nlohmann::json residual_to_json(const DreResidual& r);

}  // namespace memlq
