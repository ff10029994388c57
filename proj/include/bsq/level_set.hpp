#pragma once

#include <Eigen/SVD>
#include <cmath>

#include "bsq/models.hpp"

namespace bsq {

inline Vec evaluate_joint_symbol(const ClassicalSystem& sys, const PhasePoint& p) {
  if (p.dim() != sys.n) throw InputError("phase point dimension does not match system");
  return sys.symbol(p.packed());
}

struct LevelPointOptions {
  double tol_level = 1e-10;
  int max_iter = 200;
};

/// Projects `guess` onto Sigma_0 = {q0 = E0} by damped Gauss-Newton
/// (Levenberg-Marquardt with damping |F|, which keeps quadratic convergence
/// at regular points and still converges at critical levels).
inline PhasePoint find_level_point(const ClassicalSystem& sys, const Vec& E0,
                                   const PhasePoint& guess, const LevelPointOptions& opt = {}) {
  if (guess.dim() != sys.n) throw InputError("guess dimension does not match system");
  if (E0.size() != sys.k) throw InputError("E0 must have k components");
  Vec z = guess.packed();
  Vec F = sys.symbol(z) - E0;
  double res = F.norm();
  if (res == 0.0) return guess;

  const double floor = 1e-4 * opt.tol_level;
  int stalled = 0;
  for (int it = 0; it < opt.max_iter; ++it) {
    if (res <= floor) break;
    // keep polishing after reaching tol_level until progress stalls
    if (res <= opt.tol_level && stalled >= 3) break;
    const Mat J = sys.jacobian(z);
    const Mat G = J * J.transpose() + res * Mat::Identity(sys.k, sys.k);
    const Vec step = -J.transpose() * G.ldlt().solve(F);
    double damping = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Vec trial = z + damping * step;
      const Vec Ft = sys.symbol(trial) - E0;
      if (Ft.norm() < res) {
        stalled = Ft.norm() > 0.5 * res ? stalled + 1 : 0;
        z = trial;
        F = Ft;
        res = Ft.norm();
        improved = true;
        break;
      }
      damping *= 0.5;
    }
    if (!improved) break;
  }
  if (!(res <= opt.tol_level)) {
    throw RootFindError("find_level_point did not reach tol_level", res);
  }
  return PhasePoint::from_packed(z);
}

/// Smallest singular value of the k x 2n Jacobian of q0 at z.
inline double jacobian_min_singular_value(const ClassicalSystem& sys, const Vec& z) {
  Eigen::JacobiSVD<Mat> svd(sys.jacobian(z));
  return svd.singularValues().minCoeff();
}

/// Poisson bracket {q0_i, q0_j}(z) = grad q0_i . J grad q0_j.
inline double poisson_bracket(const ClassicalSystem& sys, const Vec& z, int i, int j) {
  const Mat J = sys.jacobian(z);
  return J.row(i).dot(apply_symplectic(J.row(j).transpose()));
}

}  // namespace bsq
