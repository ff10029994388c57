#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "bsq/errors.hpp"

namespace bsq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IVec = Eigen::VectorXi;

/// A point (x, xi) of T*R^n.
///
/// Internally the library works with the packed coordinate z = (x, xi) in
/// R^{2n}; PhasePoint is the checked boundary type.
class PhasePoint {
 public:
  PhasePoint() = default;
  PhasePoint(Vec x, Vec xi) : x_(std::move(x)), xi_(std::move(xi)) { check(); }

  static PhasePoint from_packed(const Vec& z) {
    if (z.size() == 0 || z.size() % 2 != 0) {
      throw InputError("packed phase point must have even, nonzero length");
    }
    const Eigen::Index n = z.size() / 2;
    return PhasePoint(z.head(n), z.tail(n));
  }

  const Vec& x() const noexcept { return x_; }
  const Vec& xi() const noexcept { return xi_; }
  int dim() const noexcept { return static_cast<int>(x_.size()); }

  Vec packed() const {
    Vec z(2 * x_.size());
    z << x_, xi_;
    return z;
  }

 private:
  void check() const {
    if (x_.size() == 0 || x_.size() != xi_.size()) {
      throw InputError("x and xi must have equal length n >= 1");
    }
    if (!x_.allFinite() || !xi_.allFinite()) {
      throw InputError("phase point has non-finite coordinates");
    }
  }

  Vec x_;
  Vec xi_;
};

/// J * g for g = (g_x, g_xi): returns (g_xi, -g_x).
inline Vec apply_symplectic(const Vec& g) {
  const Eigen::Index n = g.size() / 2;
  Vec out(g.size());
  out.head(n) = g.tail(n);
  out.tail(n) = -g.head(n);
  return out;
}

/// Canonical structure matrix J = [[0, I], [-I, 0]].
inline Mat symplectic_matrix(int n) {
  Mat J = Mat::Zero(2 * n, 2 * n);
  J.topRightCorner(n, n).setIdentity();
  J.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
  return J;
}

/// Common level set Sigma_0 = q0^{-1}(E0) together with seed points on it.
struct EnergyLevel {
  Vec E0;
  std::vector<PhasePoint> seed_points;
  double tol_level = 1e-10;
  /// Connectedness (H4) is asserted by the model, never computed.
  bool connectedness_asserted = true;
};

/// The matrix a whose columns are the period-lattice basis e_j = T_j / 2pi.
class BasisChange {
 public:
  BasisChange() = default;
  explicit BasisChange(Mat a) : a_(std::move(a)) {
    if (a_.rows() == 0 || a_.rows() != a_.cols()) {
      throw InputError("basis change must be a nonempty square matrix");
    }
    const double det = a_.determinant();
    if (!std::isfinite(det) || std::abs(det) == 0.0) {
      throw InputError("basis change matrix is singular");
    }
    a_inv_ = a_.inverse();
  }

  const Mat& a() const noexcept { return a_; }
  const Mat& a_inv() const noexcept { return a_inv_; }
  int dim() const noexcept { return static_cast<int>(a_.rows()); }
  double det() const { return a_.determinant(); }

  /// max |a * a_inv - I|; stays at rounding level for any well-conditioned a.
  double inverse_residual() const {
    return (a_ * a_inv_ - Mat::Identity(a_.rows(), a_.cols())).cwiseAbs().maxCoeff();
  }

 private:
  Mat a_;
  Mat a_inv_;
};

}  // namespace bsq
