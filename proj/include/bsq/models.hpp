#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bsq/phase_space.hpp"

namespace bsq {

using ModelParams = std::map<std::string, double>;

/// A family of k commuting classical Hamiltonians on T*R^n.
///
/// All maps take the packed coordinate z = (x, xi). The gradient and Hessians
/// are supplied in closed form by the model library; `hessian` may be left
/// empty, in which case callers fall back to finite differences and flag it.
struct ClassicalSystem {
  std::string name;
  ModelParams params;
  int n = 0;
  int k = 0;
  std::function<Vec(const Vec&)> symbol;        // q0(z) in R^k
  std::function<Mat(const Vec&)> jacobian;      // k x 2n, row j = grad q0_j
  std::function<Mat(const Vec&, int)> hessian;  // 2n x 2n Hessian of q0_j
  std::function<Vec(const Vec&)> subprincipal;  // q1(z); empty means q1 = 0
  std::vector<bool> separable;                  // q0_j = T(xi) + V(x)
  bool connected_levels = true;                 // H4, asserted by the model
  std::function<Vec(const Vec&)> default_guess; // initial point near q0 = E0

  bool has_subprincipal() const { return static_cast<bool>(subprincipal); }

  void check_point(const Vec& z) const {
    if (z.size() != 2 * n) throw InputError("phase point dimension does not match system");
  }
};

inline double param_or(const ModelParams& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

namespace models {

namespace detail {

inline void reject_unknown(const ModelParams& p, std::initializer_list<const char*> known,
                           const std::string& model) {
  for (const auto& [key, value] : p) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw InputError("model '" + model + "' has no parameter '" + key + "'");
  }
}

// Rescales a fixed generic direction so that a homogeneous quadratic reaches E.
inline Vec scaled_guess(Vec dir, const std::function<double(const Vec&)>& q, double E) {
  const double v = q(dir);
  if (v > 0 && E > 0) dir *= std::sqrt(E / v);
  return dir;
}

}  // namespace detail

/// 1D oscillator q0 = (x^2 + xi^2)/2, optional subprincipal q1 = c + b x.
inline ClassicalSystem ho1d(const ModelParams& p = {}) {
  detail::reject_unknown(p, {"q1_const", "q1_x"}, "ho1d");
  ClassicalSystem s;
  s.name = "ho1d";
  s.params = p;
  s.n = 1;
  s.k = 1;
  s.symbol = [](const Vec& z) { return Vec::Constant(1, 0.5 * z.squaredNorm()); };
  s.jacobian = [](const Vec& z) { return Mat(z.transpose()); };
  s.hessian = [](const Vec&, int) { return Mat(Mat::Identity(2, 2)); };
  const double c = param_or(p, "q1_const", 0.0);
  const double b = param_or(p, "q1_x", 0.0);
  if (c != 0.0 || b != 0.0) {
    s.subprincipal = [c, b](const Vec& z) { return Vec::Constant(1, c + b * z(0)); };
  }
  s.separable = {true};
  s.default_guess = [](const Vec& E) {
    return Vec((Vec(2) << std::sqrt(std::max(2.0 * E(0), 1e-12)), 0.0).finished());
  };
  return s;
}

/// 2D isotropic oscillator H = (|x|^2 + |xi|^2)/2 with angular momentum
/// L = x1 xi2 - x2 xi1 (k = n = 2).
inline ClassicalSystem ho2d_HL(const ModelParams& p = {}) {
  detail::reject_unknown(p, {}, "ho2d_HL");
  ClassicalSystem s;
  s.name = "ho2d_HL";
  s.params = p;
  s.n = 2;
  s.k = 2;
  s.symbol = [](const Vec& z) {
    Vec q(2);
    q(0) = 0.5 * z.squaredNorm();
    q(1) = z(0) * z(3) - z(1) * z(2);
    return q;
  };
  s.jacobian = [](const Vec& z) {
    Mat J(2, 4);
    J.row(0) = z.transpose();
    J.row(1) << z(3), -z(2), -z(1), z(0);
    return J;
  };
  s.hessian = [](const Vec&, int j) {
    if (j == 0) return Mat(Mat::Identity(4, 4));
    Mat H = Mat::Zero(4, 4);
    H(0, 3) = H(3, 0) = 1.0;
    H(1, 2) = H(2, 1) = -1.0;
    return H;
  };
  s.separable = {true, false};
  s.default_guess = [](const Vec& E) {
    const double ell = E(1);
    const double xi1 = std::sqrt(std::max(0.0, 2.0 * E(0) - 1.0 - ell * ell));
    return Vec((Vec(4) << 1.0, 0.0, xi1, ell).finished());
  };
  return s;
}

/// 2D isotropic oscillator with the energy alone (k = 1, n = 2).
inline ClassicalSystem ho2d_k1(const ModelParams& p = {}) {
  detail::reject_unknown(p, {}, "ho2d_k1");
  ClassicalSystem s;
  s.name = "ho2d_k1";
  s.params = p;
  s.n = 2;
  s.k = 1;
  s.symbol = [](const Vec& z) { return Vec::Constant(1, 0.5 * z.squaredNorm()); };
  s.jacobian = [](const Vec& z) { return Mat(z.transpose()); };
  s.hessian = [](const Vec&, int) { return Mat(Mat::Identity(4, 4)); };
  s.separable = {true};
  s.default_guess = [](const Vec& E) {
    return detail::scaled_guess((Vec(4) << 0.8, 0.3, -0.2, 0.5).finished(),
                                [](const Vec& z) { return 0.5 * z.squaredNorm(); }, E(0));
  };
  return s;
}

/// Anisotropic oscillator H = (x1^2 + xi1^2)/2 + w (x2^2 + xi2^2)/2 with
/// frequency ratio w (default sqrt 2), k = 1.
inline ClassicalSystem ho2d_aniso(const ModelParams& p = {}) {
  detail::reject_unknown(p, {"ratio"}, "ho2d_aniso");
  const double w = param_or(p, "ratio", std::sqrt(2.0));
  ClassicalSystem s;
  s.name = "ho2d_aniso";
  s.params = p;
  s.params["ratio"] = w;
  s.n = 2;
  s.k = 1;
  auto H = [w](const Vec& z) {
    return 0.5 * (z(0) * z(0) + z(2) * z(2)) + 0.5 * w * (z(1) * z(1) + z(3) * z(3));
  };
  s.symbol = [H](const Vec& z) { return Vec::Constant(1, H(z)); };
  s.jacobian = [w](const Vec& z) {
    Mat J(1, 4);
    J << z(0), w * z(1), z(2), w * z(3);
    return J;
  };
  s.hessian = [w](const Vec&, int) {
    Vec d(4);
    d << 1.0, w, 1.0, w;
    return Mat(d.asDiagonal());
  };
  s.separable = {true};
  s.default_guess = [H](const Vec& E) {
    return detail::scaled_guess((Vec(4) << 0.7, 0.4, -0.3, 0.6).finished(), H, E(0));
  };
  return s;
}

/// Central potential H = |xi|^2 + r^2 + lambda r^4 with L = x1 xi2 - x2 xi1.
/// Its quantization is -h^2 Laplacian + V(r) together with -i h d/dtheta.
inline ClassicalSystem radial2d_HL(const ModelParams& p = {}) {
  detail::reject_unknown(p, {"lambda"}, "radial2d_HL");
  const double lam = param_or(p, "lambda", 0.1);
  ClassicalSystem s;
  s.name = "radial2d_HL";
  s.params = p;
  s.params["lambda"] = lam;
  s.n = 2;
  s.k = 2;
  s.symbol = [lam](const Vec& z) {
    const double r2 = z(0) * z(0) + z(1) * z(1);
    Vec q(2);
    q(0) = z(2) * z(2) + z(3) * z(3) + r2 + lam * r2 * r2;
    q(1) = z(0) * z(3) - z(1) * z(2);
    return q;
  };
  s.jacobian = [lam](const Vec& z) {
    const double r2 = z(0) * z(0) + z(1) * z(1);
    const double dv = 2.0 + 4.0 * lam * r2;
    Mat J(2, 4);
    J.row(0) << dv * z(0), dv * z(1), 2.0 * z(2), 2.0 * z(3);
    J.row(1) << z(3), -z(2), -z(1), z(0);
    return J;
  };
  s.hessian = [lam](const Vec& z, int j) {
    Mat H = Mat::Zero(4, 4);
    if (j == 0) {
      const double r2 = z(0) * z(0) + z(1) * z(1);
      Eigen::Vector2d x(z(0), z(1));
      H.topLeftCorner(2, 2) = (2.0 + 4.0 * lam * r2) * Eigen::Matrix2d::Identity() +
                              8.0 * lam * x * x.transpose();
      H.bottomRightCorner(2, 2) = 2.0 * Eigen::Matrix2d::Identity();
    } else {
      H(0, 3) = H(3, 0) = 1.0;
      H(1, 2) = H(2, 1) = -1.0;
    }
    return H;
  };
  s.separable = {true, false};
  s.default_guess = [lam](const Vec& E) {
    const double r0 = 0.7;
    const double v = r0 * r0 + lam * std::pow(r0, 4);
    const double pth = E(1) / r0;
    const double pr = std::sqrt(std::max(0.05, E(0) - v - pth * pth));
    return Vec((Vec(4) << r0, 0.0, pr, pth).finished());
  };
  return s;
}

}  // namespace models

inline const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {"ho1d", "ho2d_HL", "ho2d_k1", "ho2d_aniso",
                                                 "radial2d_HL"};
  return names;
}

/// Model registry keyed by name.
inline ClassicalSystem make_system(const std::string& name, const ModelParams& params = {}) {
  if (name == "ho1d") return models::ho1d(params);
  if (name == "ho2d_HL") return models::ho2d_HL(params);
  if (name == "ho2d_k1") return models::ho2d_k1(params);
  if (name == "ho2d_aniso") return models::ho2d_aniso(params);
  if (name == "radial2d_HL") return models::radial2d_HL(params);
  throw InputError("unknown model '" + name + "'");
}

/// Hessian of q0_j, by central differences of the gradient when the model
/// supplies none. `used_fd` reports the fallback.
inline Mat hessian_of(const ClassicalSystem& sys, const Vec& z, int j, bool* used_fd = nullptr) {
  if (sys.hessian) {
    if (used_fd) *used_fd = false;
    return sys.hessian(z, j);
  }
  if (used_fd) *used_fd = true;
  const double step = 1e-5;
  const int d = 2 * sys.n;
  Mat H(d, d);
  for (int a = 0; a < d; ++a) {
    Vec zp = z, zm = z;
    zp(a) += step;
    zm(a) -= step;
    H.col(a) = (sys.jacobian(zp).row(j) - sys.jacobian(zm).row(j)).transpose() / (2 * step);
  }
  return 0.5 * (H + H.transpose());
}

}  // namespace bsq
