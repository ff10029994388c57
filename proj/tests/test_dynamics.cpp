#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "bsq/dynamics.hpp"
#include "bsq/validation.hpp"

using namespace bsq;
constexpr double pi = std::numbers::pi;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v4(double a, double b, double c, double d) { return (Vec(4) << a, b, c, d).finished(); }

PhasePoint on_level(const ClassicalSystem& sys, const Vec& E0, std::uint64_t seed) {
  const auto level = make_energy_level(sys, E0);
  return sample_level_points(sys, E0, level.seed_points.front(), 1, seed).front();
}

struct Case {
  ClassicalSystem sys;
  Vec E0;
};

std::vector<Case> cases() {
  return {{models::ho1d(), v1(0.7)},
          {models::ho2d_HL(), v2(1.0, 0.3)},
          {models::ho2d_k1(), v1(1.0)},
          {models::ho2d_aniso(), v1(1.0)},
          {models::radial2d_HL(), v2(1.0, 0.3)}};
}

}  // namespace

TEST(Field, Examples) {
  EXPECT_EQ(hamiltonian_field(models::ho1d(), 0, PhasePoint(v1(1), v1(0))), v2(0, -1));
  EXPECT_EQ(hamiltonian_field(models::ho2d_HL(), 1, PhasePoint(v2(1, 0), v2(0, 1))), v4(0, 1, -1, 0));
  EXPECT_EQ(hamiltonian_field(models::ho1d(), 0, PhasePoint(v1(0), v1(0))), Vec::Zero(2));
  EXPECT_THROW(hamiltonian_field(models::ho1d(), 1, PhasePoint(v1(0), v1(0))), InputError);
}

TEST(Flow, HarmonicOscillatorClosesAfterTwoPi) {
  const auto sys = models::ho1d();
  const PhasePoint p(v1(1.0), v1(0.0));
  const auto seg = flow(sys, v1(2 * pi), p);
  EXPECT_NEAR((seg.end.packed() - p.packed()).norm(), 0.0, 1e-9);
  EXPECT_NEAR(seg.action, pi, 1e-9);
  EXPECT_FALSE(seg.drift_warning);
}

TEST(Flow, JointPeriodOfAngularMomentumPair) {
  const auto sys = models::ho2d_HL();
  const auto p = on_level(sys, v2(1.0, 0.3), 3);
  const auto seg = flow(sys, v2(pi, pi), p);
  EXPECT_LE((seg.end.packed() - p.packed()).norm(), 1e-9);
}

TEST(Flow, ZeroTimeIsIdentity) {
  const auto sys = models::ho2d_HL();
  const PhasePoint p(v2(0.3, -0.1), v2(0.5, 0.2));
  const auto seg = flow(sys, Vec::Zero(2), p);
  EXPECT_EQ(seg.end.packed(), p.packed());
  EXPECT_EQ(seg.action, 0.0);
}

TEST(Flow, ConservesTheJointSymbol) {
  for (const auto& c : cases()) {
    SCOPED_TRACE(c.sys.name);
    const auto p = on_level(c.sys, c.E0, 5);
    const Vec t = Vec::LinSpaced(c.sys.k, 1.3, 2.1);
    const auto seg = flow(c.sys, t, p);
    EXPECT_LE((c.sys.symbol(seg.end.packed()) - c.sys.symbol(p.packed())).norm(), 1e-9);
    EXPECT_LE(seg.max_energy_drift, 10 * FlowOptions{}.tol_flow);
  }
}

TEST(Flow, ComponentFlowsCommute) {
  for (const auto& c : cases()) {
    if (c.sys.k < 2) continue;
    SCOPED_TRACE(c.sys.name);
    const auto p = on_level(c.sys, c.E0, 8);
    const double s = 0.7, t = 1.9;
    const auto a = flow(c.sys, v2(0, t), flow(c.sys, v2(s, 0), p).end).end;
    const auto b = flow(c.sys, v2(s, 0), flow(c.sys, v2(0, t), p).end).end;
    EXPECT_LE((a.packed() - b.packed()).norm(), 1e-8);
    const auto joint = flow(c.sys, v2(s, t), p).end;
    EXPECT_LE((joint.packed() - a.packed()).norm(), 1e-8);
  }
}

TEST(Flow, GroupLaw) {
  for (const auto& c : cases()) {
    SCOPED_TRACE(c.sys.name);
    const auto p = on_level(c.sys, c.E0, 9);
    const Vec t1 = Vec::LinSpaced(c.sys.k, 0.4, 1.1);
    const Vec t2 = Vec::LinSpaced(c.sys.k, 1.7, -0.6);
    const auto once = flow(c.sys, t1 + t2, p).end;
    const auto twice = flow(c.sys, t2, flow(c.sys, t1, p).end).end;
    EXPECT_LE((once.packed() - twice.packed()).norm(), 1e-8);
  }
}

TEST(Flow, ActionIsAdditive) {
  for (const auto& c : cases()) {
    SCOPED_TRACE(c.sys.name);
    const auto p = on_level(c.sys, c.E0, 10);
    for (int j = 0; j < c.sys.k; ++j) {
      Vec t1 = Vec::Zero(c.sys.k), t2 = Vec::Zero(c.sys.k);
      t1(j) = 0.9;
      t2(j) = 1.6;
      const auto a = flow(c.sys, t1, p);
      const auto b = flow(c.sys, t2, a.end);
      EXPECT_NEAR(flow(c.sys, t1 + t2, p).action, a.action + b.action, 1e-8);
    }
  }
}

TEST(Flow, ActionAlongQuarterTurnMatchesClosedForm) {
  // x = cos t, xi = -sin t: int xi dx = int_0^T sin^2 t dt
  const auto seg = flow(models::ho1d(), v1(pi / 2), PhasePoint(v1(1), v1(0)));
  EXPECT_NEAR(seg.action, pi / 4, 1e-9);
  EXPECT_NEAR(seg.end.x()(0), 0.0, 1e-9);
  EXPECT_NEAR(seg.end.xi()(0), -1.0, 1e-9);
}

TEST(Monodromy, QuarterTurnRotation) {
  const auto m = monodromy(models::ho1d(), v1(pi / 2), PhasePoint(v1(0.3), v1(0.8)));
  Mat R(2, 2);
  R << 0, 1, -1, 0;
  EXPECT_LE((m.M - R).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_FALSE(m.hessian_fd);
}

TEST(Monodromy, ZeroTimeAndJointPeriod) {
  const auto sys = models::ho2d_HL();
  const auto p = on_level(sys, v2(1.0, 0.3), 4);
  EXPECT_EQ(monodromy(sys, Vec::Zero(2), p).M, Mat::Identity(4, 4));
  EXPECT_LE((monodromy(sys, v2(pi, pi), p).M - Mat::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Monodromy, Symplectic) {
  for (const auto& c : cases()) {
    SCOPED_TRACE(c.sys.name);
    const auto p = on_level(c.sys, c.E0, 12);
    const auto m = monodromy(c.sys, Vec::LinSpaced(c.sys.k, 2.3, 0.9), p);
    EXPECT_LE(m.symplectic_residual, 1e-8);
  }
}

TEST(Monodromy, MatchesFiniteDifferenceOfFlow) {
  const auto sys = models::radial2d_HL();
  const auto p = on_level(sys, v2(1.0, 0.3), 13);
  const Vec t = v2(1.1, 0.4);
  const Mat M = monodromy(sys, t, p).M;
  for (int a = 0; a < 4; ++a) {
    Vec zp = p.packed(), zm = p.packed();
    zp(a) += 1e-6;
    zm(a) -= 1e-6;
    const Vec col = (flow(sys, t, PhasePoint::from_packed(zp)).end.packed() -
                     flow(sys, t, PhasePoint::from_packed(zm)).end.packed()) / 2e-6;
    EXPECT_LE((col - M.col(a)).norm(), 1e-5);
  }
}

TEST(Verlet, SecondOrderAndBoundedDrift) {
  const auto sys = models::ho1d();
  const PhasePoint p(v1(1), v1(0));
  const auto coarse = flow_verlet(sys, 0, 2 * pi, p, 200);
  const auto fine = flow_verlet(sys, 0, 2 * pi, p, 400);
  const double e1 = (coarse.end.packed() - p.packed()).norm();
  const double e2 = (fine.end.packed() - p.packed()).norm();
  EXPECT_NEAR(e1 / e2, 4.0, 0.2);
  // symplectic: energy error stays bounded over many periods
  const auto longrun = flow_verlet(sys, 0, 200 * pi, p, 20000);
  EXPECT_LE(longrun.max_energy_drift, 2e-3);
  EXPECT_THROW(flow_verlet(models::ho2d_HL(), 1, 1.0, on_level(models::ho2d_HL(), v2(1, 0.3), 1), 10),
               InputError);
}

TEST(Flow, RejectsBadInput) {
  const auto sys = models::ho2d_HL();
  const PhasePoint p(v2(1, 0), v2(0, 1));
  EXPECT_THROW(flow(sys, v1(1.0), p), InputError);
  EXPECT_THROW(flow(sys, v2(1.0, std::nan("")), p), InputError);
  EXPECT_THROW(flow(models::ho1d(), v1(1.0), p), InputError);
}
