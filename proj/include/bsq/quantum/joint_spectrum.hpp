#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bsq/quantum/operators.hpp"

namespace bsq {

/// Axis-aligned open cube prod_j ]center_j - half_j, center_j + half_j[.
struct Window {
  Vec center;
  Vec half;
  bool contains(const Vec& y) const {
    return ((y - center).cwiseAbs().array() < half.array()).all();
  }
};

struct SpectralPoint {
  Vec lambda;
  int multiplicity = 1;
  double residual = 0.0;  // max_j |Q_j v - lambda_j v| for a representative v
};

/// An eigenvalue cluster rejected by the truncation guard.
struct DiscardedPoint {
  Vec lambda;
  double boundary_mass = 0.0;
  std::string where;
};

struct JointSpectrum {
  double h = 0.0;
  Window window;
  std::vector<SpectralPoint> points;
  std::vector<DiscardedPoint> discarded;
  double max_extrapolation_change = 0.0;  // radial backend: |R2 - R1| over points
};

struct JointSpectrumOptions {
  double tol_degen_rel = 1e-9;   // tol_degen = tol_degen_rel * |Q_1|
  double guard_mass = 1e-8;
  double edge_margin = 0.0;      // radial: extra energy band solved around the window
};

namespace detail {

inline bool lex_less_tol(const Vec& x, const Vec& y, double tol) {
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x(j) < y(j) - tol) return true;
    if (x(j) > y(j) + tol) return false;
  }
  return false;
}

/// Sorts and merges points that agree within tol in every component.
inline std::vector<SpectralPoint> merge_points(std::vector<SpectralPoint> pts, double tol) {
  std::sort(pts.begin(), pts.end(), [tol](const SpectralPoint& a, const SpectralPoint& b) {
    return lex_less_tol(a.lambda, b.lambda, tol);
  });
  std::vector<SpectralPoint> out;
  for (auto& p : pts) {
    if (!out.empty() && (out.back().lambda - p.lambda).cwiseAbs().maxCoeff() <= tol) {
      auto& q = out.back();
      const double w = static_cast<double>(q.multiplicity);
      q.lambda = (w * q.lambda + p.multiplicity * p.lambda) / (w + p.multiplicity);
      q.multiplicity += p.multiplicity;
      q.residual = std::max(q.residual, p.residual);
    } else {
      out.push_back(std::move(p));
    }
  }
  return out;
}

struct ClusterContext {
  const DenseBlock* block;
  const Window* window;
  Vec tol;           // per-operator degeneracy tolerance
  double guard_mass;
  std::vector<SpectralPoint>* out;
  std::vector<DiscardedPoint>* discarded;
};

/// Recursive refinement: diagonalize Q_j on span(V), cluster, descend.
inline void refine_cluster(const ClusterContext& ctx, int j, const CMat& V, Vec prefix) {
  const auto& B = *ctx.block;
  const int k = static_cast<int>(B.Q.size());
  if (j == k) {
    const Vec& lam = prefix;
    if (!ctx.window->contains(lam)) return;
    double mass = 0.0;
    for (Eigen::Index c = 0; c < V.cols(); ++c) {
      double mc = 0.0;
      for (Eigen::Index r = 0; r < V.rows(); ++r) {
        if (B.boundary[r]) mc += std::norm(V(r, c));
      }
      mass = std::max(mass, mc);
    }
    if (mass > ctx.guard_mass) {
      ctx.discarded->push_back({lam, mass, B.label});
      return;
    }
    const CMat v = V.col(0);
    double res = 0.0;
    for (int i = 0; i < k; ++i) res = std::max(res, (B.Q[i] * v - lam(i) * v).norm());
    ctx.out->push_back({lam, static_cast<int>(V.cols()), res});
    return;
  }
  const CMat M = V.adjoint() * B.Q[j] * V;
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (M + M.adjoint()));
  const Vec& ev = es.eigenvalues();
  const double tol = ctx.tol(j);
  Eigen::Index start = 0;
  for (Eigen::Index i = 1; i <= ev.size(); ++i) {
    if (i < ev.size() && ev(i) - ev(i - 1) <= tol) continue;
    if (i < ev.size()) {
      const double gap = ev(i) - ev(i - 1);
      // a split this close to the tolerance cannot be trusted
      Vec probe = prefix;
      probe.conservativeResize(j + 1);
      probe(j) = ev(i - 1);
      Window wide = *ctx.window;
      wide.center.conservativeResize(j + 1);
      wide.half = (wide.half.head(j + 1).array() + 10 * tol).matrix();
      if (gap < 10 * tol && wide.contains(probe)) {
        std::ostringstream msg;
        msg << "ambiguous eigenvalue cluster in block " << B.label << " for operator " << j + 1
            << ": gap " << gap << " vs tolerance " << tol;
        throw DegeneracyError(msg.str());
      }
    }
    const Eigen::Index len = i - start;
    Vec next = prefix;
    next.conservativeResize(j + 1);
    next(j) = ev.segment(start, len).mean();
    // clusters far outside the window in this component cannot come back
    if (std::abs(next(j) - ctx.window->center(j)) < ctx.window->half(j) + tol) {
      refine_cluster(ctx, j + 1, V * es.eigenvectors().middleCols(start, len), next);
    }
    start = i;
  }
}

/// Eigenvalues of a symmetric tridiagonal matrix, selected by value range
/// (il = 0) or by 1-based index range; eigenvectors on request.
inline Vec tridiagonal_eigen(const Tridiagonal& T, double vl, double vu, int il, int iu,
                             Mat* vectors = nullptr) {
  Vec d = T.diag, e = T.off;
  const auto n = static_cast<lapack_int>(d.size());
  lapack_int m = 0;
  Vec w(n);
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(n));
  const char range = il > 0 ? 'I' : 'V';
  const int max_m = il > 0 ? iu - il + 1 : n;
  Mat Z;
  if (vectors) Z.resize(n, std::max(1, max_m));
  const lapack_int info = LAPACKE_dstevr(
      LAPACK_COL_MAJOR, vectors ? 'V' : 'N', range, n, d.data(), e.data(), vl, vu, il, iu,
      LAPACKE_dlamch('S'), &m, w.data(), vectors ? Z.data() : nullptr, vectors ? n : 1,
      isuppz.data());
  if (info != 0) throw Error("tridiagonal eigensolver failed (info " + std::to_string(info) + ")");
  if (vectors) *vectors = Z.leftCols(m);
  return w.head(m);
}

/// Number of eigenvalues of T below x (Sturm sequence count).
inline int sturm_count(const Tridiagonal& T, double x) {
  int count = 0;
  double q = 1.0;
  for (Eigen::Index i = 0; i < T.diag.size(); ++i) {
    const double b2 = i > 0 ? T.off(i - 1) * T.off(i - 1) : 0.0;
    q = T.diag(i) - x - (i > 0 ? b2 / q : 0.0);
    if (q == 0.0) q = std::numeric_limits<double>::epsilon() * (std::abs(T.diag(i)) + 1.0);
    if (q < 0) ++count;
  }
  return count;
}

inline Vec tridiagonal_apply(const Tridiagonal& T, const Vec& v) {
  const Eigen::Index n = v.size();
  Vec y = T.diag.cwiseProduct(v);
  y.head(n - 1) += T.off.head(n - 1).cwiseProduct(v.tail(n - 1));
  y.tail(n - 1) += T.off.head(n - 1).cwiseProduct(v.head(n - 1));
  return y;
}

}  // namespace detail

inline JointSpectrum joint_spectrum_dense(const OperatorSet& ops, const Window& window,
                                          const JointSpectrumOptions& opt) {
  JointSpectrum js;
  js.h = ops.h;
  js.window = window;
  const Vec tol = opt.tol_degen_rel * ops.norms.cwiseMax(1e-300);
  std::vector<SpectralPoint> raw;
  for (const auto& B : ops.blocks) {
    if (B.Q.empty() || B.Q[0].rows() == 0) continue;
    detail::ClusterContext ctx{&B, &window, tol, opt.guard_mass, &raw, &js.discarded};
    detail::refine_cluster(ctx, 0, CMat::Identity(B.Q[0].rows(), B.Q[0].cols()), Vec());
  }
  js.points = detail::merge_points(std::move(raw), tol.maxCoeff());
  return js;
}

/// Radial sectors: eigenvalues on three nested grids, combined by two-level
/// Richardson extrapolation for a second-order scheme,
/// R1 = (4 E2 - E1)/3, R2 = (4 E3 - E2)/3, E = (16 R2 - R1)/15.
inline JointSpectrum joint_spectrum_radial(const OperatorSet& ops, const Window& window,
                                           const JointSpectrumOptions& opt) {
  JointSpectrum js;
  js.h = ops.h;
  js.window = window;
  const double margin = opt.edge_margin > 0 ? opt.edge_margin : 2 * ops.h;
  const double lo = window.center(0) - window.half(0) - margin;
  const double hi = window.center(0) + window.half(0) + margin;
  std::vector<SpectralPoint> raw;
  for (const auto& s : ops.sectors) {
    const double L = ops.h * s.m;
    if (std::abs(L - window.center(1)) >= window.half(1)) continue;
    const auto& coarse = s.grids[0];
    const int il = detail::sturm_count(coarse, lo) + 1;
    const int iu = detail::sturm_count(coarse, hi);
    if (iu < il) continue;
    Mat vecs;
    const Vec e1 = detail::tridiagonal_eigen(coarse, 0, 0, il, iu, &vecs);
    const Vec e2 = detail::tridiagonal_eigen(s.grids[1], 0, 0, il, iu);
    const Vec e3 = detail::tridiagonal_eigen(s.grids[2], 0, 0, il, iu);
    const Eigen::Index n = coarse.diag.size();
    const Eigen::Index top = n - static_cast<Eigen::Index>(std::ceil(0.05 * n));
    for (Eigen::Index i = 0; i < e1.size(); ++i) {
      const double R1 = (4 * e2(i) - e1(i)) / 3;
      const double R2 = (4 * e3(i) - e2(i)) / 3;
      const double E = (16 * R2 - R1) / 15;
      Vec lam(2);
      lam << E, L;
      if (!window.contains(lam)) continue;
      js.max_extrapolation_change = std::max(js.max_extrapolation_change, std::abs(R2 - R1));
      const Vec v = vecs.col(i);
      const double mass = v.tail(n - top).squaredNorm();
      if (mass > opt.guard_mass) {
        js.discarded.push_back({lam, mass, "m=" + std::to_string(s.m)});
        continue;
      }
      const double res = (detail::tridiagonal_apply(coarse, v) - e1(i) * v).norm();
      raw.push_back({lam, 1, res});
    }
  }
  // the centrifugal term makes |Q_1| grid dependent; scale by the energies solved for
  js.points = detail::merge_points(std::move(raw), opt.tol_degen_rel * std::max(std::abs(hi), 1.0));
  return js;
}

/// Simultaneous diagonalization of the commuting family restricted to the
/// window. Multiplicities are dimensions of the joint eigenspaces.
inline JointSpectrum joint_spectrum(const OperatorSet& ops, const Window& window,
                                    const JointSpectrumOptions& opt = {}) {
  if (window.center.size() != ops.k || window.half.size() != ops.k) {
    throw InputError("window must have k components");
  }
  const double scale = ops.norms.size() ? ops.norms.maxCoeff() : 1.0;
  if (ops.commutator_residual > 1e-10 * std::max(scale, 1.0)) {
    throw PreconditionError("operators do not commute (residual " +
                            std::to_string(ops.commutator_residual) + ")");
  }
  if (ops.backend == "radial-sector") return joint_spectrum_radial(ops, window, opt);
  return joint_spectrum_dense(ops, window, opt);
}

}  // namespace bsq
