#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "bsq/cycle_invariants.hpp"

namespace bsq {

/// Everything needed to enumerate the Bohr-Sommerfeld points at a given h.
struct LatticeSpec {
  Vec E0;
  BasisChange a;
  Vec alpha;
  IVec mu;
  Vec delta;
  Vec window_c;  // cube half-widths in units of h
  int k() const { return static_cast<int>(E0.size()); }
};

struct PredictedPoint {
  Vec value;
  IVec index;
};

inline LatticeSpec build_lattice_spec(const Vec& E0, const PeriodLattice& periods,
                                      const CycleInvariants& inv, const Vec& window_c = Vec()) {
  const Eigen::Index k = E0.size();
  if (periods.a.dim() != k || inv.alpha.size() != k || inv.mu.size() != k ||
      inv.delta.size() != k) {
    throw InputError("lattice ingredients have inconsistent dimensions");
  }
  if (window_c.size() != 0 && window_c.size() != k) throw InputError("window_c must have k entries");
  if (!E0.allFinite() || !inv.alpha.allFinite() || !inv.delta.allFinite()) {
    throw InputError("lattice ingredients must be finite");
  }
  LatticeSpec s;
  s.E0 = E0;
  s.a = periods.a;
  s.alpha = inv.alpha;
  s.mu = inv.mu;
  s.delta = inv.delta;
  s.window_c = window_c;
  return s;
}

/// Lattice map L(h) = (a^T)^{-1}: the point with index n is
/// E0 + L (v + n h), v_j = (delta_j/2pi - mu_j/4) h - alpha_j/2pi.
inline Mat lattice_map(const LatticeSpec& spec) { return spec.a.a_inv().transpose(); }

inline Vec lattice_offset(const LatticeSpec& spec, double h) {
  constexpr double two_pi = 2 * std::numbers::pi;
  Vec v(spec.k());
  for (int j = 0; j < spec.k(); ++j) {
    v(j) = (spec.delta(j) / two_pi - spec.mu(j) / 4.0) * h - spec.alpha(j) / two_pi;
  }
  return v;
}

inline Vec lattice_point(const LatticeSpec& spec, double h, const IVec& n) {
  return spec.E0 + lattice_map(spec) * (lattice_offset(spec, h) + h * n.cast<double>());
}

/// Smallest distance between distinct lattice points (h times the shortest
/// nonzero vector of the columns of (a^T)^{-1}).
inline double min_lattice_gap(const LatticeSpec& spec, double h) {
  const Mat B = lll_reduce(lattice_map(spec));
  double g = std::numeric_limits<double>::infinity();
  for (int j = 0; j < B.cols(); ++j) g = std::min(g, B.col(j).norm());
  return h * g;
}

/// c_j = 0.45 x gap / h, the same for every axis.
inline Vec default_window_c(const LatticeSpec& spec) {
  return Vec::Constant(spec.k(), 0.45 * min_lattice_gap(spec, 1.0));
}

inline Vec window_half_widths(const LatticeSpec& spec, double h) {
  const Vec c = spec.window_c.size() ? spec.window_c : default_window_c(spec);
  return c * h;
}

/// Lexicographic order that treats components within `tol` as equal.
inline bool lex_less(const Vec& x, const Vec& y, double tol) {
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x(j) < y(j) - tol) return true;
    if (x(j) > y(j) + tol) return false;
  }
  return false;
}

/// All lattice points in prod_j ]E0_j - c_j h, E0_j + c_j h[. The integer
/// box comes from mapping the window corners back through a^T.
inline std::vector<PredictedPoint> enumerate_lattice(const LatticeSpec& spec, double h) {
  if (!(h > 0)) throw InputError("h must be positive");
  const int k = spec.k();
  const Vec w = window_half_widths(spec, h);
  const Mat L = lattice_map(spec);
  const Mat Linv = spec.a.a().transpose();
  const Vec v = lattice_offset(spec, h);
  Vec nlo = Vec::Constant(k, std::numeric_limits<double>::infinity());
  Vec nhi = -nlo;
  for (int corner = 0; corner < (1 << k); ++corner) {
    Vec y(k);
    for (int j = 0; j < k; ++j) y(j) = (corner >> j & 1) ? w(j) : -w(j);
    const Vec n = (Linv * y - v) / h;
    nlo = nlo.cwiseMin(n);
    nhi = nhi.cwiseMax(n);
  }
  IVec lo(k), hi(k);
  for (int j = 0; j < k; ++j) {
    lo(j) = static_cast<int>(std::floor(nlo(j))) - 1;
    hi(j) = static_cast<int>(std::ceil(nhi(j))) + 1;
  }
  std::vector<PredictedPoint> out;
  IVec n = lo;
  while (true) {
    const Vec y = L * (v + h * n.cast<double>());
    if ((y.cwiseAbs().array() < w.array()).all()) out.push_back({spec.E0 + y, n});
    int j = 0;
    while (j < k && ++n(j) > hi(j)) {
      n(j) = lo(j);
      ++j;
    }
    if (j == k) break;
  }
  std::sort(out.begin(), out.end(), [h](const PredictedPoint& x, const PredictedPoint& y) {
    return lex_less(x.value, y.value, 1e-9 * h);
  });
  return out;
}

/// Closest lattice point to `y` among the integer neighbours of the
/// real-valued preimage.
inline PredictedPoint nearest_lattice_point(const LatticeSpec& spec, double h, const Vec& y) {
  const int k = spec.k();
  const Vec v = lattice_offset(spec, h);
  const Vec nreal = (spec.a.a().transpose() * (y - spec.E0) - v) / h;
  const Mat L = lattice_map(spec);
  PredictedPoint best;
  double best_d = std::numeric_limits<double>::infinity();
  IVec base(k);
  for (int j = 0; j < k; ++j) base(j) = static_cast<int>(std::floor(nreal(j)));
  const int span = 2;  // neighbours in [-1, 2] per axis cover skewed cells
  IVec off = IVec::Constant(k, -1);
  while (true) {
    const IVec n = base + off;
    const Vec p = spec.E0 + L * (v + h * n.cast<double>());
    const double d = (p - y).norm();
    if (d < best_d) {
      best_d = d;
      best = {p, n};
    }
    int j = 0;
    while (j < k && ++off(j) > span) {
      off(j) = -1;
      ++j;
    }
    if (j == k) break;
  }
  return best;
}

}  // namespace bsq
