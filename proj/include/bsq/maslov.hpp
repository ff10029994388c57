#pragma once

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "bsq/dynamics.hpp"

namespace bsq {

/// A sampled loop of Lagrangian frames in (R^{4n}, omega (-) omega).
///
/// Rows of each frame are ordered (u_x, u_xi, v_x, v_xi) for a tangent vector
/// (u, v) of T*R^n x T*R^n.
struct LagrangianFrameLoop {
  std::vector<Mat> samples;
  bool closed = false;
  double isotropy_residual = 0.0;    // max |F^T Omega F|
  double max_principal_angle = 0.0;  // between consecutive spans
  double closure_residual = 0.0;     // |P_first - P_last| of the span projectors
};

namespace detail {

inline Mat product_form(int n) {
  Mat Om = Mat::Zero(4 * n, 4 * n);
  Om.topLeftCorner(2 * n, 2 * n) = symplectic_matrix(n);
  Om.bottomRightCorner(2 * n, 2 * n) = -symplectic_matrix(n);
  return Om;
}

inline Mat orthonormal_columns(const Mat& F) {
  Eigen::HouseholderQR<Mat> qr(F);
  return qr.householderQ() * Mat::Identity(F.rows(), F.cols());
}

inline double largest_principal_angle(const Mat& Q1, const Mat& Q2) {
  Eigen::JacobiSVD<Mat> svd(Q1.transpose() * Q2);
  const double c = std::clamp(svd.singularValues().minCoeff(), 0.0, 1.0);
  return std::acos(c);
}

/// Orthonormal basis of the complement of span{grad q0_j(p)} in R^{2n}.
inline Mat level_tangent_basis(const ClassicalSystem& sys, const Vec& z) {
  const Mat G = sys.jacobian(z).transpose();  // 2n x k
  Eigen::HouseholderQR<Mat> qr(G);
  const Mat Q = qr.householderQ();
  return Q.rightCols(2 * sys.n - sys.k);
}

}  // namespace detail

/// Loop s -> T Lambda_1 at (Psi^{sT}(p), p), Lambda_1 = {(Psi^t(y), y)}:
/// columns (dPsi^{sT} V_i, V_i) for a basis V_i of T_p Sigma_0 and
/// (H_j(Psi^{sT} p), 0) for the k Hamiltonian fields.
inline LagrangianFrameLoop lambda1_frame_loop(const ClassicalSystem& sys, const PhasePoint& p,
                                              const Vec& T, int n_frames,
                                              const FlowOptions& opt = {}) {
  if (T.size() != sys.k) throw InputError("period vector must have k components");
  if (n_frames < 2) throw InputError("need at least two frames");
  const int n = sys.n;
  const int d = 2 * n;
  const Vec z0 = p.packed();
  const Mat V = detail::level_tangent_basis(sys, z0);
  const auto path = sample_straight_path(sys, T, p, n_frames, true, opt);
  const Mat Om = detail::product_form(n);

  LagrangianFrameLoop loop;
  Mat prevQ;
  for (const auto& ps : path) {
    Mat F = Mat::Zero(2 * d, d);
    F.topLeftCorner(d, d - sys.k) = ps.M * V;
    F.bottomLeftCorner(d, d - sys.k) = V;
    const Mat Jac = sys.jacobian(ps.z);
    for (int j = 0; j < sys.k; ++j) {
      F.block(0, d - sys.k + j, d, 1) = apply_symplectic(Jac.row(j).transpose());
    }
    Eigen::JacobiSVD<Mat> svd(F);
    const auto& sv = svd.singularValues();
    if (sv.minCoeff() < 1e-8 * sv.maxCoeff()) {
      throw FrameError("frame is rank deficient along the loop");
    }
    const Mat Q = detail::orthonormal_columns(F);
    loop.isotropy_residual =
        std::max(loop.isotropy_residual, (Q.transpose() * Om * Q).cwiseAbs().maxCoeff());
    if (prevQ.size() > 0) {
      loop.max_principal_angle =
          std::max(loop.max_principal_angle, detail::largest_principal_angle(prevQ, Q));
    }
    prevQ = Q;
    loop.samples.push_back(std::move(F));
  }
  const Mat Q0 = detail::orthonormal_columns(loop.samples.front());
  const Mat Q1 = detail::orthonormal_columns(loop.samples.back());
  loop.closure_residual = (Q0 * Q0.transpose() - Q1 * Q1.transpose()).cwiseAbs().maxCoeff();
  loop.closed = loop.closure_residual <= 1e-6;
  return loop;
}

/// Phase of det(X + i Xi)^2 for a Lagrangian frame in (R^{4n}, omega (-) omega),
/// after the first factor is reflected xi -> -xi to reach a standard
/// symplectic space. The reflection fixes the orientation convention: the
/// energy cycle of the 1D oscillator has index +2.
inline std::complex<double> det_squared_phase(const Mat& F) {
  const Eigen::Index d = F.rows() / 2;
  const Eigen::Index n = d / 2;
  const Mat Q = detail::orthonormal_columns(F);
  Eigen::MatrixXcd Z(d, F.cols());
  Z.topRows(n) = Q.topRows(n).cast<std::complex<double>>() -
                 std::complex<double>(0, 1) * Q.middleRows(n, n).cast<std::complex<double>>();
  Z.bottomRows(n) = Q.middleRows(2 * n, n).cast<std::complex<double>>() +
                    std::complex<double>(0, 1) * Q.bottomRows(n).cast<std::complex<double>>();
  const std::complex<double> det = Z.determinant();
  const std::complex<double> sq = det * det;
  return sq / std::abs(sq);
}

/// Degree of s -> det^2 along a closed loop of Lagrangian frames, by
/// continuous phase unwrapping. Frame gauge (a real change of basis of the
/// columns) only rescales det by a real factor and drops out of det^2.
inline int maslov_index(const LagrangianFrameLoop& loop) {
  if (loop.samples.empty()) throw InputError("empty frame loop");
  if (!loop.closed) throw PreconditionError("maslov_index: frame loop is not closed");
  if (loop.max_principal_angle >= std::numbers::pi / 4) {
    throw UndersamplingError("consecutive frames differ by a principal angle >= pi/4");
  }
  double total = 0.0;
  std::complex<double> prev = det_squared_phase(loop.samples.front());
  for (std::size_t i = 1; i < loop.samples.size(); ++i) {
    const std::complex<double> cur = det_squared_phase(loop.samples[i]);
    const double jump = std::arg(cur / prev);
    if (std::abs(jump) > std::numbers::pi / 2) {
      throw UndersamplingError("det^2 phase jumped by more than pi/2 between frames");
    }
    total += jump;
    prev = cur;
  }
  const double winding = total / (2 * std::numbers::pi);
  const double rounded = std::round(winding);
  if (std::abs(winding - rounded) > 1e-6) {
    throw PreconditionError("det^2 winding is not an integer; loop does not close");
  }
  return static_cast<int>(rounded);
}

/// Maslov index of the cycle gamma^T through p, doubling the sampling density
/// until the unwrapping is unambiguous.
inline int cycle_maslov_index(const ClassicalSystem& sys, const PhasePoint& p, const Vec& T,
                              int n_frames = 256, const FlowOptions& opt = {},
                              int max_doublings = 5) {
  for (int attempt = 0;; ++attempt) {
    try {
      return maslov_index(lambda1_frame_loop(sys, p, T, n_frames, opt));
    } catch (const UndersamplingError&) {
      if (attempt >= max_doublings) throw;
      n_frames *= 2;
    }
  }
}

}  // namespace bsq
