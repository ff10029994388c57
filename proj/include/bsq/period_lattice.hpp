#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "bsq/validation.hpp"

namespace bsq {

/// Reduced basis T_1..T_k (columns) of the joint-flow period lattice on Sigma_0.
struct PeriodLattice {
  Mat basis;                 // k x k, column j = T_j
  BasisChange a;             // e_j = T_j / 2pi
  Vec return_residuals;      // |Psi^{T_j}(p) - p| at the detection point
  Vec verify_residuals;      // worst residual of T_j over the verification points
  std::size_t n_candidates = 0;
};

struct PeriodSearchOptions {
  double t_max = 8.0;
  int grid = 0;              // samples per axis; 0 picks a default from k
  double tol_period = 1e-9;
  double tol_verify = 1e-7;
  int n_verify = 3;
  std::uint64_t seed = 7;
  double tol_level = 1e-10;
  int newton_max_iter = 30;
  FlowOptions flow;
};

namespace detail {

inline Mat gram_schmidt(const Mat& B) {
  Mat Bs = B;
  for (int i = 0; i < B.cols(); ++i) {
    for (int j = 0; j < i; ++j) {
      Bs.col(i) -= B.col(i).dot(Bs.col(j)) / Bs.col(j).squaredNorm() * Bs.col(j);
    }
  }
  return Bs;
}

inline double column_volume(const Mat& B) {
  return std::sqrt(std::max(0.0, (B.transpose() * B).determinant()));
}

}  // namespace detail

/// LLL reduction (delta = 0.99) of the column basis B. For k = 2 this is
/// Lagrange-Gauss reduction.
inline Mat lll_reduce(Mat B, double delta = 0.99) {
  const int k = static_cast<int>(B.cols());
  int i = 1;
  int guard = 0;
  while (i < k && guard++ < 10000) {
    for (int j = i - 1; j >= 0; --j) {
      const Mat Bs = detail::gram_schmidt(B);
      const double mu = B.col(i).dot(Bs.col(j)) / Bs.col(j).squaredNorm();
      if (std::abs(mu) > 0.5) B.col(i) -= std::round(mu) * B.col(j);
    }
    const Mat Bs = detail::gram_schmidt(B);
    const double mu = B.col(i).dot(Bs.col(i - 1)) / Bs.col(i - 1).squaredNorm();
    if (Bs.col(i).squaredNorm() >= (delta - mu * mu) * Bs.col(i - 1).squaredNorm()) {
      ++i;
    } else {
      B.col(i).swap(B.col(i - 1));
      i = std::max(i - 1, 1);
    }
  }
  return B;
}

/// Integer matrix U with B2 = B1 U when the two column bases span the same
/// lattice (U integral within tol and |det U| = 1); empty matrix otherwise.
inline Eigen::MatrixXi unimodular_transform(const Mat& B1, const Mat& B2, double tol = 1e-6) {
  if (B1.rows() != B2.rows() || B1.cols() != B2.cols()) return {};
  const Mat U = B1.fullPivLu().solve(B2);
  const Mat R = U.array().round().matrix();
  if ((U - R).cwiseAbs().maxCoeff() > tol) return {};
  if (std::abs(std::abs(R.determinant()) - 1.0) > 1e-9) return {};
  return R.cast<int>();
}

inline bool unimodularly_equivalent(const Mat& B1, const Mat& B2, double tol = 1e-6) {
  return unimodular_transform(B1, B2, tol).size() > 0;
}

/// Reduced basis with each vector's leading significant entry positive,
/// ordered by length (lexicographic tie break).
inline Mat canonical_lattice_basis(const Mat& B) {
  Mat R = lll_reduce(B);
  std::vector<Vec> cols;
  for (int j = 0; j < R.cols(); ++j) {
    Vec v = R.col(j);
    const double scale = v.cwiseAbs().maxCoeff();
    for (Eigen::Index a = 0; a < v.size(); ++a) {
      if (std::abs(v(a)) > 1e-9 * scale) {
        if (v(a) < 0) v = -v;
        break;
      }
    }
    cols.push_back(v);
  }
  std::stable_sort(cols.begin(), cols.end(), [](const Vec& u, const Vec& v) {
    const double nu = u.norm(), nv = v.norm();
    if (std::abs(nu - nv) > 1e-9 * std::max(nu, nv)) return nu < nv;
    for (Eigen::Index a = 0; a < u.size(); ++a) {
      if (std::abs(u(a) - v(a)) > 1e-9 * std::max(nu, nv)) return u(a) > v(a);
    }
    return false;
  });
  Mat out(R.rows(), R.cols());
  for (int j = 0; j < R.cols(); ++j) out.col(j) = cols[j];
  return out;
}

/// Gauss-Newton solve of Psi^T(p) = p in the k time variables.
/// Returns the final residual; T is updated in place.
inline double refine_period(const ClassicalSystem& sys, const PhasePoint& p, Vec& T,
                            const PeriodSearchOptions& opt) {
  const Vec z0 = p.packed();
  double res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.newton_max_iter; ++it) {
    const Vec z = flow(sys, T, p, opt.flow).end.packed();
    const Vec r = z - z0;
    res = r.norm();
    if (res <= 0.1 * opt.tol_period) break;
    Mat J(2 * sys.n, sys.k);
    for (int j = 0; j < sys.k; ++j) {
      J.col(j) = apply_symplectic(sys.jacobian(z).row(j).transpose());
    }
    const Vec step = J.colPivHouseholderQr().solve(r);
    if (!step.allFinite()) break;
    T -= step;
    if (step.norm() < 1e-15 * (1.0 + T.norm())) break;
  }
  return res;
}

inline double return_residual(const ClassicalSystem& sys, const PhasePoint& p, const Vec& T,
                              const FlowOptions& flow_opt = {}) {
  return (flow(sys, T, p, flow_opt).end.packed() - p.packed()).norm();
}

/// Detects the lattice {T : Psi^T(p) = p} by a joint grid scan of
/// [0, t_max] x [-t_max, t_max]^{k-1} for near-returns, Newton refinement of
/// each local minimum, and a successive-minima basis of the refined set.
/// The basis is then checked at n_verify further points of Sigma_0 (H2).
inline PeriodLattice detect_period_lattice(const ClassicalSystem& sys, const Vec& E0,
                                           const PhasePoint& p,
                                           const PeriodSearchOptions& opt = {}) {
  const int k = sys.k;
  if (E0.size() != k) throw InputError("E0 must have k components");
  if ((sys.symbol(p.packed()) - E0).norm() > 1e3 * opt.tol_level) {
    throw PreconditionError("detect_period_lattice: point is not on Sigma_0");
  }
  if (k > 3) throw UnsupportedError("period scan supports k <= 3");
  int n_grid = opt.grid;
  if (n_grid <= 0) n_grid = k == 1 ? 2001 : (k == 2 ? 161 : 41);
  if (n_grid % 2 == 0) ++n_grid;

  std::vector<std::vector<double>> axes(k);
  std::vector<double> spacing(k);
  for (int j = 0; j < k; ++j) {
    const double lo = j == 0 ? 0.0 : -opt.t_max;
    spacing[j] = (opt.t_max - lo) / (n_grid - 1);
    for (int i = 0; i < n_grid; ++i) axes[j].push_back(lo + i * spacing[j]);
  }

  // Psi^t(p) on the grid, axis 0 slowest.
  std::vector<Vec> layer{p.packed()};
  for (int j = 0; j < k; ++j) {
    std::vector<Vec> next;
    next.reserve(layer.size() * axes[j].size());
    for (const auto& z : layer) {
      auto samples = sample_component_flow(sys, j, z, axes[j], opt.flow);
      for (auto& s : samples) next.push_back(std::move(s));
    }
    layer = std::move(next);
  }
  const Vec z0 = p.packed();
  std::vector<double> dist(layer.size());
  for (std::size_t i = 0; i < layer.size(); ++i) dist[i] = (layer[i] - z0).norm();

  double tau = 0.0;
  for (int j = 0; j < k; ++j) tau += spacing[j] * hamiltonian_field(sys, j, p).norm();

  auto decode = [&](std::size_t flat) {
    std::vector<int> idx(k);
    for (int j = k - 1; j >= 0; --j) {
      idx[j] = static_cast<int>(flat % n_grid);
      flat /= n_grid;
    }
    return idx;
  };
  auto encode = [&](const std::vector<int>& idx) {
    std::size_t flat = 0;
    for (int j = 0; j < k; ++j) flat = flat * n_grid + idx[j];
    return flat;
  };

  std::vector<Vec> periods;
  auto add_period = [&](const Vec& T) {
    for (const auto& q : periods) {
      if ((q - T).norm() < 1e-6 * std::max(1.0, T.norm())) return;
    }
    periods.push_back(T);
  };

  const int n_offsets = static_cast<int>(std::pow(3, k));
  for (std::size_t flat = 0; flat < layer.size(); ++flat) {
    if (dist[flat] > tau) continue;
    const auto idx = decode(flat);
    bool is_origin = idx[0] == 0;
    for (int j = 1; j < k; ++j) is_origin = is_origin && idx[j] == n_grid / 2;
    if (is_origin) continue;
    bool is_min = true;
    for (int o = 0; o < n_offsets && is_min; ++o) {
      std::vector<int> nb(idx);
      int code = o;
      bool self = true;
      bool inside = true;
      for (int j = 0; j < k; ++j) {
        const int off = code % 3 - 1;
        code /= 3;
        self = self && off == 0;
        nb[j] += off;
        inside = inside && nb[j] >= 0 && nb[j] < n_grid;
      }
      if (self || !inside) continue;
      if (dist[encode(nb)] < dist[flat]) is_min = false;
    }
    if (!is_min) continue;
    Vec T(k);
    for (int j = 0; j < k; ++j) T(j) = axes[j][idx[j]];
    const double res = refine_period(sys, p, T, opt);
    if (res > opt.tol_period) continue;
    if (T.norm() < 1e-6 * opt.t_max) continue;
    add_period(T);
    add_period(-T);
  }
  if (periods.empty()) {
    throw NoPeriodError("no joint-flow return within t_max = " + std::to_string(opt.t_max));
  }

  // successive minima: shortest vector, then smallest positive volume
  std::stable_sort(periods.begin(), periods.end(),
                   [](const Vec& u, const Vec& v) { return u.norm() < v.norm(); });
  Mat B(k, 0);
  for (int m = 0; m < k; ++m) {
    double best_vol = std::numeric_limits<double>::infinity();
    int best = -1;
    for (std::size_t c = 0; c < periods.size(); ++c) {
      Mat trial(k, m + 1);
      trial << B, periods[c];
      const double vol = detail::column_volume(trial);
      double scale = 1.0;
      for (int j = 0; j <= m; ++j) scale *= trial.col(j).norm();
      if (vol <= 1e-6 * scale) continue;
      if (vol < best_vol * (1 - 1e-9)) {
        best_vol = vol;
        best = static_cast<int>(c);
      }
    }
    if (best < 0) {
      throw NoPeriodError("only " + std::to_string(m) + " independent periods within t_max = " +
                          std::to_string(opt.t_max));
    }
    Mat grown(k, m + 1);
    grown << B, periods[best];
    B = grown;
  }
  for (const auto& c : periods) {
    const Vec coef = B.fullPivLu().solve(c);
    if ((coef - coef.array().round().matrix()).cwiseAbs().maxCoeff() > 1e-6) {
      throw NoPeriodError("refined returns do not generate a lattice at this grid resolution");
    }
  }

  PeriodLattice out;
  out.basis = canonical_lattice_basis(B);
  out.n_candidates = periods.size();
  out.a = BasisChange(out.basis / (2 * std::numbers::pi));
  out.return_residuals.resize(k);
  for (int j = 0; j < k; ++j) {
    Vec T = out.basis.col(j);
    out.return_residuals(j) = refine_period(sys, p, T, opt);
    out.basis.col(j) = T;
  }
  out.a = BasisChange(out.basis / (2 * std::numbers::pi));

  out.verify_residuals = Vec::Zero(k);
  if (opt.n_verify > 0) {
    const auto pts = sample_level_points(sys, E0, p, opt.n_verify, opt.seed, opt.tol_level,
                                         2 * std::numbers::pi, opt.flow);
    for (const auto& q : pts) {
      for (int j = 0; j < k; ++j) {
        const double r = return_residual(sys, q, out.basis.col(j), opt.flow);
        out.verify_residuals(j) = std::max(out.verify_residuals(j), r);
        if (r > opt.tol_verify) {
          throw HypothesisViolation(
              "H2", "period " + std::to_string(j + 1) +
                        " does not return at another point of Sigma_0 (residual " +
                        std::to_string(r) + ")");
        }
      }
    }
  }
  return out;
}

}  // namespace bsq
