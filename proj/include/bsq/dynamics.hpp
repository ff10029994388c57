#pragma once

#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <cstddef>
#include <vector>

#include "bsq/models.hpp"

namespace bsq {

struct FlowOptions {
  double tol_flow = 1e-10;  // per-step absolute and relative error tolerance
  std::size_t max_steps = 5'000'000;
};

/// One joint-flow segment Psi^t(p) with the action  int xi dx  along it.
struct TrajectorySegment {
  PhasePoint start;
  Vec t;
  PhasePoint end;
  double action = 0.0;
  std::size_t steps = 0;
  double max_energy_drift = 0.0;
  bool drift_warning = false;  // max_energy_drift > 10 tol_flow
};

struct Monodromy {
  PhasePoint base;
  Vec t;
  Mat M;
  double symplectic_residual = 0.0;  // |M^T J M - J|_max
  bool hessian_fd = false;
};

/// J grad q0_j(p) = (d q0_j / d xi, -d q0_j / d x).
inline Vec hamiltonian_field(const ClassicalSystem& sys, int j, const PhasePoint& p) {
  if (j < 0 || j >= sys.k) throw InputError("component index out of range");
  if (p.dim() != sys.n) throw InputError("phase point dimension does not match system");
  return apply_symplectic(sys.jacobian(p.packed()).row(j).transpose());
}

inline double symplectic_residual(const Mat& M) {
  const Mat J = symplectic_matrix(static_cast<int>(M.rows() / 2));
  return (M.transpose() * J * M - J).cwiseAbs().maxCoeff();
}

namespace detail {

using State = std::vector<double>;

// State layout: z (2n) | action | subprincipal quadrature | M (2n x 2n, column major).
struct FieldRhs {
  const ClassicalSystem* sys;
  Vec w;  // weights of the combined Hamiltonian <w, q0>
  bool variational;
  mutable bool hessian_fd = false;

  void operator()(const State& y, State& dy, double /*s*/) const {
    const int d = 2 * sys->n;
    Eigen::Map<const Vec> z(y.data(), d);
    const Vec zv = z;
    const Vec g = sys->jacobian(zv).transpose() * w;
    const Vec f = apply_symplectic(g);
    Eigen::Map<Vec>(dy.data(), d) = f;
    dy[d] = zv.tail(sys->n).dot(f.head(sys->n));
    dy[d + 1] = sys->has_subprincipal() ? sys->subprincipal(zv).dot(w) : 0.0;
    if (variational) {
      Mat Hw = Mat::Zero(d, d);
      for (int j = 0; j < sys->k; ++j) {
        if (w(j) == 0.0) continue;
        bool fd = false;
        Hw += w(j) * hessian_of(*sys, zv, j, &fd);
        hessian_fd = hessian_fd || fd;
      }
      Eigen::Map<const Mat> M(y.data() + d + 2, d, d);
      Mat JH(d, d);
      JH.topRows(sys->n) = Hw.bottomRows(sys->n);
      JH.bottomRows(sys->n) = -Hw.topRows(sys->n);
      Eigen::Map<Mat>(dy.data() + d + 2, d, d) = JH * M;
    }
  }
};

/// Adaptive RKF7(8) integration of the field of <w, q0> in the time s.
class FieldIntegrator {
 public:
  FieldIntegrator(const ClassicalSystem& sys, Vec w, const Vec& z0, bool variational,
                  const FlowOptions& opt)
      : rhs_{&sys, std::move(w), variational}, opt_(opt), d_(2 * sys.n) {
    sys.check_point(z0);
    y_.assign(d_ + 2 + (variational ? d_ * d_ : 0), 0.0);
    Eigen::Map<Vec>(y_.data(), d_) = z0;
    if (variational) Eigen::Map<Mat>(y_.data() + d_ + 2, d_, d_).setIdentity();
    q_start_ = sys.symbol(z0);
  }

  void advance_to(double s_target) {
    namespace odeint = boost::numeric::odeint;
    auto stepper = odeint::make_controlled(opt_.tol_flow, opt_.tol_flow,
                                           odeint::runge_kutta_fehlberg78<State>());
    while (s_ < s_target) {
      double ds = std::min(ds_, s_target - s_);
      const bool last = ds == s_target - s_;
      double s = s_;
      const auto res = stepper.try_step(rhs_, y_, s, ds);
      if (res == odeint::success) {
        ++steps_;
        if (steps_ > opt_.max_steps) throw IntegrationError("flow exceeded max_steps");
        // land exactly on the target to avoid a sliver step
        s_ = last ? s_target : s;
        if (!last || ds > ds_) ds_ = ds;
        record_drift();
      } else {
        ds_ = ds;
        if (ds_ < 1e-14 * std::max(1.0, std::abs(s_))) {
          throw IntegrationError("step size underflow in flow integration");
        }
      }
    }
  }

  Vec z() const { return Eigen::Map<const Vec>(y_.data(), d_); }
  double action() const { return y_[d_]; }
  double subprincipal_integral() const { return y_[d_ + 1]; }
  Mat monodromy() const { return Eigen::Map<const Mat>(y_.data() + d_ + 2, d_, d_); }
  std::size_t steps() const { return steps_; }
  double max_drift() const { return max_drift_; }
  bool hessian_fd() const { return rhs_.hessian_fd; }

 private:
  void record_drift() {
    const Vec q = rhs_.sys->symbol(z());
    max_drift_ = std::max(max_drift_, (q - q_start_).norm());
  }

  FieldRhs rhs_;
  FlowOptions opt_;
  int d_;
  State y_;
  Vec q_start_;
  double s_ = 0.0;
  double ds_ = 1e-3;
  std::size_t steps_ = 0;
  double max_drift_ = 0.0;
};

inline Vec unit_weight(int k, int j, double value) {
  Vec w = Vec::Zero(k);
  w(j) = value;
  return w;
}

}  // namespace detail

/// Composite joint flow Psi^t = Phi_1^{t_1} o ... o Phi_k^{t_k} (Phi_k acts
/// first). The action is accumulated leg by leg along that path.
inline TrajectorySegment flow(const ClassicalSystem& sys, const Vec& t, const PhasePoint& p,
                              const FlowOptions& opt = {}) {
  if (t.size() != sys.k) throw InputError("time vector must have k components");
  if (p.dim() != sys.n) throw InputError("phase point dimension does not match system");
  if (!t.allFinite()) throw InputError("time vector has non-finite entries");
  TrajectorySegment seg;
  seg.start = p;
  seg.t = t;
  Vec z = p.packed();
  const Vec q0 = sys.symbol(z);
  for (int j = sys.k - 1; j >= 0; --j) {
    if (t(j) == 0.0) continue;
    detail::FieldIntegrator integ(sys, detail::unit_weight(sys.k, j, t(j)), z, false, opt);
    integ.advance_to(1.0);
    z = integ.z();
    seg.action += integ.action();
    seg.steps += integ.steps();
    seg.max_energy_drift = std::max(seg.max_energy_drift, (sys.symbol(z) - q0).norm());
    seg.max_energy_drift = std::max(seg.max_energy_drift, integ.max_drift());
  }
  seg.end = PhasePoint::from_packed(z);
  seg.drift_warning = seg.max_energy_drift > 10.0 * opt.tol_flow;
  return seg;
}

/// Linearization dPsi^t(p) of the composite flow.
inline Monodromy monodromy(const ClassicalSystem& sys, const Vec& t, const PhasePoint& p,
                          const FlowOptions& opt = {}) {
  if (t.size() != sys.k) throw InputError("time vector must have k components");
  if (p.dim() != sys.n) throw InputError("phase point dimension does not match system");
  Monodromy out;
  out.base = p;
  out.t = t;
  const int d = 2 * sys.n;
  out.M = Mat::Identity(d, d);
  Vec z = p.packed();
  for (int j = sys.k - 1; j >= 0; --j) {
    if (t(j) == 0.0) continue;
    detail::FieldIntegrator integ(sys, detail::unit_weight(sys.k, j, t(j)), z, true, opt);
    integ.advance_to(1.0);
    z = integ.z();
    out.M = integ.monodromy() * out.M;
    out.hessian_fd = out.hessian_fd || integ.hessian_fd();
  }
  out.symplectic_residual = symplectic_residual(out.M);
  return out;
}

/// Sample of the straight path s -> Psi^{sT}(p), 0 <= s <= 1.
struct PathSample {
  double s = 0.0;
  Vec z;
  Mat M;  // dPsi^{sT}(p); empty unless requested
  double action = 0.0;
  double subprincipal = 0.0;
};

/// Integrates the field of <T, q0> for unit time, which by commutativity is
/// the joint flow along the straight line s T. Returns n_intervals + 1 samples.
inline std::vector<PathSample> sample_straight_path(const ClassicalSystem& sys, const Vec& T,
                                                    const PhasePoint& p, int n_intervals,
                                                    bool with_monodromy,
                                                    const FlowOptions& opt = {}) {
  if (T.size() != sys.k) throw InputError("period vector must have k components");
  if (n_intervals < 1) throw InputError("need at least one interval");
  detail::FieldIntegrator integ(sys, T, p.packed(), with_monodromy, opt);
  std::vector<PathSample> out;
  out.reserve(n_intervals + 1);
  for (int i = 0; i <= n_intervals; ++i) {
    const double s = static_cast<double>(i) / n_intervals;
    if (T.squaredNorm() > 0.0) integ.advance_to(s);
    PathSample ps;
    ps.s = s;
    ps.z = integ.z();
    if (with_monodromy) ps.M = integ.monodromy();
    ps.action = integ.action();
    ps.subprincipal = integ.subprincipal_integral();
    out.push_back(std::move(ps));
  }
  return out;
}

/// Samples Phi_j^{t}(z) for each t in `times` (any sign, any order).
inline std::vector<Vec> sample_component_flow(const ClassicalSystem& sys, int j, const Vec& z,
                                              const std::vector<double>& times,
                                              const FlowOptions& opt = {}) {
  std::vector<Vec> out(times.size());
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= 0) pos.push_back(i);
    else neg.push_back(i);
  }
  auto run = [&](std::vector<std::size_t>& idx, double sign) {
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return std::abs(times[a]) < std::abs(times[b]); });
    detail::FieldIntegrator integ(sys, detail::unit_weight(sys.k, j, sign), z, false, opt);
    for (std::size_t i : idx) {
      integ.advance_to(std::abs(times[i]));
      out[i] = integ.z();
    }
  };
  run(pos, 1.0);
  run(neg, -1.0);
  return out;
}

/// Fixed-step Stormer-Verlet flow of a separable component q0_j = T(xi) + V(x).
/// Second order and symplectic; used for long-time qualitative checks.
inline TrajectorySegment flow_verlet(const ClassicalSystem& sys, int j, double t,
                                     const PhasePoint& p, std::size_t n_steps) {
  if (j < 0 || j >= sys.k) throw InputError("component index out of range");
  if (j >= static_cast<int>(sys.separable.size()) || !sys.separable[j]) {
    throw InputError("Verlet mode requires a separable component");
  }
  if (n_steps == 0) throw InputError("n_steps must be positive");
  const int n = sys.n;
  Vec z = p.packed();
  const double q_start = sys.symbol(z)(j);
  const double dt = t / static_cast<double>(n_steps);
  TrajectorySegment seg;
  seg.start = p;
  seg.t = detail::unit_weight(sys.k, j, t);
  for (std::size_t s = 0; s < n_steps; ++s) {
    Vec g = sys.jacobian(z).row(j).transpose();
    z.tail(n) -= 0.5 * dt * g.head(n);
    g = sys.jacobian(z).row(j).transpose();
    const Vec dx = dt * g.tail(n);
    seg.action += z.tail(n).dot(dx);
    z.head(n) += dx;
    g = sys.jacobian(z).row(j).transpose();
    z.tail(n) -= 0.5 * dt * g.head(n);
    seg.max_energy_drift = std::max(seg.max_energy_drift, std::abs(sys.symbol(z)(j) - q_start));
  }
  seg.steps = n_steps;
  seg.end = PhasePoint::from_packed(z);
  return seg;
}

}  // namespace bsq
