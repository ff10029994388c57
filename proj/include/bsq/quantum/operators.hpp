#pragma once

#include <lapacke.h>

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "bsq/models.hpp"

namespace bsq {

using CMat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

/// One invariant block of a commuting family: k Hermitian matrices on a
/// common basis, with the basis states counted as truncation boundary.
struct DenseBlock {
  std::string label;
  std::vector<CMat> Q;
  std::vector<bool> boundary;
};

/// Symmetric tridiagonal matrix (diagonal, off-diagonal) on a radial grid.
struct Tridiagonal {
  Vec diag;
  Vec off;
  double dr = 0.0;
  double r_max = 0.0;
};

/// Angular sector m of a rotationally invariant pair (H, L): H restricted to
/// the sector on three nested grids (dr, dr/2, dr/4); L acts as h m.
struct RadialSector {
  int m = 0;
  std::vector<Tridiagonal> grids;
};

/// Commuting matrix realization of the k operators at one h.
struct OperatorSet {
  double h = 0.0;
  int k = 0;
  std::string backend;
  std::map<std::string, double> descriptor;   // truncation parameters
  std::vector<DenseBlock> blocks;             // backend "oscillator-exact"
  std::vector<RadialSector> sectors;          // backend "radial-sector"
  Vec norms;                                  // upper bounds of |Q_j|
  double commutator_residual = 0.0;
};

/// Truncation controls. Zero entries are filled from the energy window.
struct TruncationOptions {
  int n_max = 0;                    // oscillator: highest total quantum number kept
  double e_max = 0.0;               // largest energy of interest for Q_1
  double points_per_wavelength = 80.0;
  double potential_factor = 4.0;    // radial: V(r_max) >= factor * e_max
  double decay_exponent = 20.0;     // radial: WKB decay of states at e_max past r_max
  int m_min = 0;                    // radial: sector range
  int m_max = -1;
};

namespace detail {

/// True when q0_j(z) = z^T S_j z / 2 with S_j its (constant) Hessian.
inline bool is_homogeneous_quadratic(const ClassicalSystem& sys) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  const int d = 2 * sys.n;
  for (int trial = 0; trial < 8; ++trial) {
    Vec z(d);
    for (int a = 0; a < d; ++a) z(a) = g(rng);
    const Vec q = sys.symbol(z);
    for (int j = 0; j < sys.k; ++j) {
      const Mat S = hessian_of(sys, Vec::Zero(d), j);
      if (std::abs(q(j) - 0.5 * z.dot(S * z)) > 1e-12 * (1 + std::abs(q(j)))) return false;
    }
  }
  return true;
}

/// Constant value of q1 if it is constant, otherwise empty.
inline Vec constant_subprincipal(const ClassicalSystem& sys) {
  if (!sys.has_subprincipal()) return Vec::Zero(sys.k);
  std::mt19937_64 rng(19);
  std::normal_distribution<double> g(0.0, 1.0);
  const Vec c = sys.subprincipal(Vec::Zero(2 * sys.n));
  for (int trial = 0; trial < 8; ++trial) {
    Vec z(2 * sys.n);
    for (Eigen::Index a = 0; a < z.size(); ++a) z(a) = g(rng);
    if ((sys.subprincipal(z) - c).cwiseAbs().maxCoeff() > 1e-14) return {};
  }
  return c;
}

using SpMat = Eigen::SparseMatrix<cplx>;

inline SpMat kron(const SpMat& A, const SpMat& B) {
  SpMat K(A.rows() * B.rows(), A.cols() * B.cols());
  std::vector<Eigen::Triplet<cplx>> t;
  for (int ka = 0; ka < A.outerSize(); ++ka) {
    for (SpMat::InnerIterator ia(A, ka); ia; ++ia) {
      for (int kb = 0; kb < B.outerSize(); ++kb) {
        for (SpMat::InnerIterator ib(B, kb); ib; ++ib) {
          t.emplace_back(ia.row() * B.rows() + ib.row(), ia.col() * B.cols() + ib.col(),
                         ia.value() * ib.value());
        }
      }
    }
  }
  K.setFromTriplets(t.begin(), t.end());
  return K;
}

inline SpMat sparse_identity(int d) {
  SpMat I(d, d);
  I.setIdentity();
  return I;
}

/// Position and momentum operators (X_1..X_n, Xi_1..Xi_n) on the tensor
/// Hermite basis with d states per mode.
inline std::vector<SpMat> canonical_operators(int n, int d, double h) {
  SpMat a(d, d);
  std::vector<Eigen::Triplet<cplx>> t;
  for (int i = 1; i < d; ++i) t.emplace_back(i - 1, i, std::sqrt(static_cast<double>(i)));
  a.setFromTriplets(t.begin(), t.end());
  const SpMat ad = SpMat(a.adjoint());
  const double s = std::sqrt(h / 2);
  const SpMat x1 = s * (a + ad);
  const SpMat p1 = cplx(0, s) * (ad - a);
  std::vector<SpMat> Z(2 * n);
  for (int mode = 0; mode < n; ++mode) {
    SpMat X = mode == 0 ? x1 : sparse_identity(d);
    SpMat P = mode == 0 ? p1 : sparse_identity(d);
    for (int other = 1; other < n; ++other) {
      X = kron(X, other == mode ? x1 : sparse_identity(d));
      P = kron(P, other == mode ? p1 : sparse_identity(d));
    }
    Z[mode] = X;
    Z[n + mode] = P;
  }
  return Z;
}

inline double row_sum_norm(const CMat& A) { return A.cwiseAbs().rowwise().sum().maxCoeff(); }

}  // namespace detail

/// Backend "oscillator-exact": Weyl quantization of homogeneous quadratic
/// symbols, Op(z^T S z / 2) = sum_ab S_ab (Z_a Z_b + Z_b Z_a) / 4, in the
/// Hermite basis. Each mode keeps n_max + 2 states so that all products are
/// exact on total quantum number N <= n_max; number-conserving operators then
/// split into one block per N.
inline OperatorSet discretize_oscillator(const ClassicalSystem& sys, double h,
                                         const TruncationOptions& tr) {
  if (!detail::is_homogeneous_quadratic(sys)) {
    throw UnsupportedError("oscillator-exact backend needs homogeneous quadratic symbols ('" +
                           sys.name + "')");
  }
  const Vec c1 = detail::constant_subprincipal(sys);
  if (c1.size() == 0) {
    throw UnsupportedError("oscillator-exact backend supports only constant subprincipal symbols");
  }
  const int n = sys.n;
  int n_max = tr.n_max;
  if (n_max <= 0) {
    if (!(tr.e_max > 0)) throw InputError("need n_max or e_max for the oscillator basis");
    // lowest mode frequency bounds the quantum number reached below e_max
    const Mat S = hessian_of(sys, Vec::Zero(2 * n), 0);
    const double wmin = Eigen::SelfAdjointEigenSolver<Mat>(S).eigenvalues().minCoeff();
    if (!(wmin > 0)) throw UnsupportedError("first operator must be positive definite");
    n_max = static_cast<int>(std::ceil(2 * tr.e_max / (wmin * h))) + 5;
  }
  const int d = n_max + 2;
  const auto Z = detail::canonical_operators(n, d, h);
  const Eigen::Index dim = Z[0].rows();

  // quantum numbers of each tensor state; mode 0 is the slowest index
  std::vector<int> total(dim, 0);
  for (Eigen::Index s = 0; s < dim; ++s) {
    Eigen::Index rest = s;
    for (int mode = n - 1; mode >= 0; --mode) {
      total[s] += static_cast<int>(rest % d);
      rest /= d;
    }
  }
  std::vector<std::vector<Eigen::Index>> shell(n_max + 1);
  std::vector<Eigen::Index> local(dim, -1);
  for (Eigen::Index s = 0; s < dim; ++s) {
    if (total[s] <= n_max) {
      local[s] = static_cast<Eigen::Index>(shell[total[s]].size());
      shell[total[s]].push_back(s);
    }
  }

  OperatorSet ops;
  ops.h = h;
  ops.k = sys.k;
  ops.backend = "oscillator-exact";
  ops.descriptor["n_max"] = n_max;
  ops.descriptor["states_per_mode"] = d;
  ops.blocks.resize(n_max + 1);
  for (int N = 0; N <= n_max; ++N) {
    auto& B = ops.blocks[N];
    B.label = "N=" + std::to_string(N);
    const auto sz = static_cast<Eigen::Index>(shell[N].size());
    B.Q.assign(sys.k, CMat::Zero(sz, sz));
    B.boundary.assign(sz, N > 0.95 * n_max);
  }
  ops.norms = Vec::Zero(sys.k);
  for (int j = 0; j < sys.k; ++j) {
    const Mat S = hessian_of(sys, Vec::Zero(2 * n), j);
    detail::SpMat Q(dim, dim);
    for (int a = 0; a < 2 * n; ++a) {
      for (int b = 0; b < 2 * n; ++b) {
        if (S(a, b) == 0.0) continue;
        const detail::SpMat ab = Z[a] * Z[b];
        const detail::SpMat ba = Z[b] * Z[a];
        Q += (0.25 * S(a, b)) * (ab + ba);
      }
    }
    double leak = 0.0, scale = 0.0;
    for (int col = 0; col < Q.outerSize(); ++col) {
      for (detail::SpMat::InnerIterator it(Q, col); it; ++it) {
        const auto r = it.row(), c = it.col();
        if (total[r] > n_max || total[c] > n_max) continue;
        scale = std::max(scale, std::abs(it.value()));
        if (total[r] != total[c]) {
          leak = std::max(leak, std::abs(it.value()));
          continue;
        }
        ops.blocks[total[r]].Q[j](local[r], local[c]) = it.value();
      }
    }
    if (leak > 1e-12 * std::max(scale, 1.0)) {
      throw UnsupportedError("operator " + std::to_string(j + 1) +
                             " does not conserve the total quantum number");
    }
    for (auto& B : ops.blocks) {
      if (c1(j) != 0.0) B.Q[j].diagonal().array() += h * c1(j);
      ops.norms(j) = std::max(ops.norms(j), detail::row_sum_norm(B.Q[j]));
    }
  }
  for (const auto& B : ops.blocks) {
    for (int i = 0; i < sys.k; ++i) {
      for (int j = i + 1; j < sys.k; ++j) {
        const CMat C = B.Q[i] * B.Q[j] - B.Q[j] * B.Q[i];
        ops.commutator_residual = std::max(ops.commutator_residual, C.norm());
      }
    }
  }
  return ops;
}

/// Sector Hamiltonian -h^2 (1/r)(r psi')' + h^2 m^2 / r^2 psi + V(r) psi in
/// flux form on cell centres r_i = (i - 1/2) dr, symmetrized with u = sqrt(r) psi.
/// The inner face r = 0 carries no flux; psi vanishes past r_max.
inline Tridiagonal radial_sector_matrix(double h, int m, double dr, double r_max,
                                        const std::function<double(double)>& V) {
  const auto N = static_cast<Eigen::Index>(std::floor(r_max / dr));
  if (N < 3) throw InputError("radial grid needs at least three points");
  Tridiagonal T;
  T.dr = dr;
  T.r_max = N * dr;
  T.diag.resize(N);
  T.off.resize(N);
  T.off(N - 1) = 0.0;
  const double h2 = h * h, dr2 = dr * dr;
  for (Eigen::Index i = 0; i < N; ++i) {
    const double r = (i + 0.5) * dr;
    const double rm = i * dr, rp = (i + 1) * dr;
    T.diag(i) = h2 * (rp + rm) / (r * dr2) + h2 * m * m / (r * r) + V(r);
    if (i + 1 < N) T.off(i) = -h2 * rp / (std::sqrt(r * (r + dr)) * dr2);
  }
  return T;
}

/// Backend "radial-sector" for the rotationally invariant pair
/// H = -h^2 Laplacian + r^2 + lambda r^4, L = -i h d/dtheta.
inline OperatorSet discretize_radial(const ClassicalSystem& sys, double h,
                                     const TruncationOptions& tr) {
  if (sys.name != "radial2d_HL") {
    throw UnsupportedError("radial-sector backend supports only 'radial2d_HL'");
  }
  if (!(tr.e_max > 0)) throw InputError("radial-sector backend needs e_max");
  if (tr.m_max < tr.m_min) throw InputError("radial-sector backend needs a sector range");
  const double lam = sys.params.at("lambda");
  const std::function<double(double)> V = [lam](double r) { return r * r + lam * r * r * r * r; };
  // V(r_max) = factor * e_max, solved for r^2
  const double target = tr.potential_factor * tr.e_max;
  const double r2 = lam > 0 ? (-1 + std::sqrt(1 + 4 * lam * target)) / (2 * lam) : target;
  // extend until the WKB decay past the turning point reaches exp(-decay)
  double r_max = std::sqrt(r2);
  {
    double integral = 0.0, r = 0.0;
    const double step = 1e-3;
    while (integral < tr.decay_exponent * h || r < r_max) {
      r += step;
      integral += std::sqrt(std::max(0.0, V(r) - tr.e_max)) * step;
    }
    r_max = r;
  }
  const double wavelength = 2 * std::numbers::pi * h / std::sqrt(tr.e_max);
  const double dr = wavelength / tr.points_per_wavelength;

  OperatorSet ops;
  ops.h = h;
  ops.k = 2;
  ops.backend = "radial-sector";
  ops.descriptor["r_max"] = r_max;
  ops.descriptor["dr"] = dr;
  ops.descriptor["points_per_wavelength"] = tr.points_per_wavelength;
  ops.descriptor["m_min"] = tr.m_min;
  ops.descriptor["m_max"] = tr.m_max;
  ops.norms = Vec::Zero(2);
  for (int m = tr.m_min; m <= tr.m_max; ++m) {
    RadialSector s;
    s.m = m;
    for (int level = 0; level < 3; ++level) {
      s.grids.push_back(radial_sector_matrix(h, m, dr / (1 << level), r_max, V));
    }
    const auto& fine = s.grids.back();
    const double bound = (fine.diag.cwiseAbs() + 2 * fine.off.cwiseAbs()).maxCoeff();
    ops.norms(0) = std::max(ops.norms(0), bound);
    ops.norms(1) = std::max(ops.norms(1), h * std::abs(m));
    ops.sectors.push_back(std::move(s));
  }
  ops.descriptor["grid_points"] = static_cast<double>(ops.sectors.empty()
                                                         ? 0
                                                         : ops.sectors.front().grids.front().diag.size());
  return ops;  // L is h m on each sector: commutators vanish identically
}

inline const std::vector<std::string>& backend_names() {
  static const std::vector<std::string> names{"oscillator-exact", "radial-sector"};
  return names;
}

inline OperatorSet discretize(const ClassicalSystem& sys, double h, const std::string& backend,
                              const TruncationOptions& tr) {
  if (!(h > 0)) throw InputError("h must be positive");
  if (backend == "oscillator-exact") return discretize_oscillator(sys, h, tr);
  if (backend == "radial-sector") return discretize_radial(sys, h, tr);
  throw InputError("unknown backend '" + backend + "'");
}

/// Truncation covering the cube prod ]center_j - half_j, center_j + half_j[.
/// Energies are taken from the first operator, angular momenta from the second.
inline TruncationOptions truncation_for_window(const std::string& backend, double h,
                                               const Vec& center, const Vec& half,
                                               TruncationOptions base = {}) {
  const double e_top = center(0) + half(0);
  if (base.e_max <= 0) base.e_max = 1.5 * std::max(e_top, h);
  if (backend == "radial-sector" && base.m_max < base.m_min) {
    if (center.size() < 2) throw InputError("radial-sector window needs two components");
    base.m_min = static_cast<int>(std::floor((center(1) - half(1)) / h));
    base.m_max = static_cast<int>(std::ceil((center(1) + half(1)) / h));
  }
  return base;
}

}  // namespace bsq
