#pragma once

#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "bsq/maslov.hpp"
#include "bsq/period_lattice.hpp"

namespace bsq {

/// Per basic cycle T_j: action alpha_j, Maslov index mu_j and subprincipal
/// integral delta_j (zero when the model has no subprincipal symbol).
struct CycleInvariants {
  Vec alpha;
  IVec mu;
  Vec delta;
  Vec alpha_spread;  // max - min of alpha_j over the base points
  Vec delta_spread;
  std::size_t n_base_points = 0;
};

/// A(gamma^T(p)) =  int xi dx  along the joint flow; T must be a period at p.
inline double cycle_action(const ClassicalSystem& sys, const PhasePoint& p, const Vec& T,
                           double tol_period = 1e-9, const FlowOptions& opt = {}) {
  if (T.size() != sys.k) throw InputError("period vector must have k components");
  if (T.squaredNorm() == 0.0) return 0.0;
  const auto seg = flow(sys, T, p, opt);
  const double res = (seg.end.packed() - p.packed()).norm();
  if (res > tol_period) {
    throw PreconditionError("cycle_action: T is not a period at p (residual " +
                            std::to_string(res) + ")");
  }
  return seg.action;
}

struct SubprincipalIntegral {
  double value = 0.0;
  double spread = 0.0;           // max - min over the checked points
  std::vector<double> per_point;
  bool consistent = true;        // spread <= tolerance, i.e. (H'3) holds
};

/// delta(T) = int_0^1 <q1(Psi^{sT}(p)), T> ds at p and at extra points of
/// Sigma_0; the spread across points tests (H'3).
inline SubprincipalIntegral subprincipal_cycle_integral(
    const ClassicalSystem& sys, const Vec& E0, const PhasePoint& p, const Vec& T,
    int n_check = 3, std::uint64_t seed = 11, double tol = 1e-6, double tol_level = 1e-10,
    const FlowOptions& opt = {}) {
  SubprincipalIntegral out;
  if (!sys.has_subprincipal() || T.squaredNorm() == 0.0) {
    out.per_point.assign(1 + std::max(0, n_check), 0.0);
    return out;
  }
  std::vector<PhasePoint> pts{p};
  if (n_check > 0) {
    auto extra = sample_level_points(sys, E0, p, n_check, seed, tol_level,
                                     2 * std::numbers::pi, opt);
    pts.insert(pts.end(), extra.begin(), extra.end());
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& q : pts) {
    const double v = sample_straight_path(sys, T, q, 1, false, opt).back().subprincipal;
    out.per_point.push_back(v);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  out.value = out.per_point.front();
  out.spread = hi - lo;
  out.consistent = out.spread <= tol;
  return out;
}

struct InvariantOptions {
  int n_frames = 256;
  int n_base_points = 5;
  std::uint64_t seed = 5;
  double tol_period = 1e-9;
  double tol_subprincipal = 1e-6;
  double tol_level = 1e-10;
  FlowOptions flow;
};

/// alpha, mu and delta for every basis vector of the period lattice. Actions
/// are evaluated at n_base_points points of Sigma_0 to expose base-point
/// dependence; (H'3) failure is raised as a HypothesisViolation.
inline CycleInvariants compute_cycle_invariants(const ClassicalSystem& sys, const Vec& E0,
                                                const PhasePoint& p, const PeriodLattice& lat,
                                                const InvariantOptions& opt = {}) {
  const int k = sys.k;
  CycleInvariants inv;
  inv.alpha.resize(k);
  inv.mu.resize(k);
  inv.delta = Vec::Zero(k);
  inv.alpha_spread = Vec::Zero(k);
  inv.delta_spread = Vec::Zero(k);
  std::vector<PhasePoint> base{p};
  if (opt.n_base_points > 1) {
    auto extra = sample_level_points(sys, E0, p, opt.n_base_points - 1, opt.seed, opt.tol_level,
                                     2 * std::numbers::pi, opt.flow);
    base.insert(base.end(), extra.begin(), extra.end());
  }
  inv.n_base_points = base.size();
  for (int j = 0; j < k; ++j) {
    const Vec T = lat.basis.col(j);
    // returns at the other base points carry the period's own error
    const double tol = std::max(opt.tol_period, 10 * lat.verify_residuals(j));
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t b = 0; b < base.size(); ++b) {
      const double a = cycle_action(sys, base[b], T, b == 0 ? opt.tol_period : tol, opt.flow);
      if (b == 0) inv.alpha(j) = a;
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
    inv.alpha_spread(j) = hi - lo;
    inv.mu(j) = cycle_maslov_index(sys, p, T, opt.n_frames, opt.flow);
    if (sys.has_subprincipal()) {
      const auto sub = subprincipal_cycle_integral(sys, E0, p, T, 3, opt.seed + 1,
                                                   opt.tol_subprincipal, opt.tol_level, opt.flow);
      inv.delta(j) = sub.value;
      inv.delta_spread(j) = sub.spread;
      if (!sub.consistent) {
        throw HypothesisViolation("H'3", "subprincipal integral over cycle " +
                                             std::to_string(j + 1) +
                                             " depends on the base point (spread " +
                                             std::to_string(sub.spread) + ")");
      }
    }
  }
  return inv;
}

}  // namespace bsq
