#include <gtest/gtest.h>

#include <numbers>
#include <set>

#include "bsq/lattice.hpp"

using namespace bsq;
constexpr double pi = std::numbers::pi;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

LatticeSpec ho1d_spec(double c) {
  LatticeSpec s;
  s.E0 = Vec::Constant(1, 0.5);
  s.a = BasisChange(Mat::Identity(1, 1));
  s.alpha = Vec::Constant(1, pi);
  s.mu = IVec::Constant(1, 2);
  s.delta = Vec::Zero(1);
  s.window_c = Vec::Constant(1, c);
  return s;
}

LatticeSpec hl_spec(double E, double l, const Vec& c) {
  Mat a(2, 2);
  a << 0.5, 0.5, 0.5, -0.5;
  LatticeSpec s;
  s.E0 = v2(E, l);
  s.a = BasisChange(a);
  s.alpha = v2(pi * (E + l), pi * (E - l));
  s.mu = IVec::Constant(2, 2);
  s.delta = Vec::Zero(2);
  s.window_c = c;
  return s;
}

std::set<std::pair<long, long>> rounded(const std::vector<PredictedPoint>& pts, double scale) {
  std::set<std::pair<long, long>> out;
  for (const auto& p : pts) {
    out.insert({std::lround(p.value(0) * scale), p.value.size() > 1 ? std::lround(p.value(1) * scale) : 0});
  }
  return out;
}

}  // namespace

TEST(BuildLatticeSpec, PackagesInvariants) {
  PeriodLattice lat;
  lat.basis = Mat::Constant(1, 1, 2 * pi);
  lat.a = BasisChange(Mat::Identity(1, 1));
  CycleInvariants inv;
  inv.alpha = Vec::Constant(1, pi);
  inv.mu = IVec::Constant(1, 2);
  inv.delta = Vec::Zero(1);
  const auto s = build_lattice_spec(Vec::Constant(1, 0.5), lat, inv, Vec::Constant(1, 5.0));
  EXPECT_EQ(s.alpha(0), pi);
  EXPECT_EQ(s.mu(0), 2);
  EXPECT_EQ(s.delta(0), 0.0);
  EXPECT_EQ(s.a.a()(0, 0), 1.0);
  inv.mu = IVec::Constant(2, 2);
  EXPECT_THROW(build_lattice_spec(Vec::Constant(1, 0.5), lat, inv), InputError);
}

TEST(BuildLatticeSpec, HLBasisChangeFromPeriods) {
  Mat T(2, 2);
  T << pi, pi, pi, -pi;
  PeriodLattice lat;
  lat.basis = T;
  lat.a = BasisChange(T / (2 * pi));
  Mat expected(2, 2);
  expected << 0.5, 0.5, 0.5, -0.5;
  EXPECT_LE((lat.a.a() - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EnumerateLattice, OscillatorGivesHalfIntegers) {
  const auto s = ho1d_spec(5.0);
  const auto pts = enumerate_lattice(s, 0.1);
  ASSERT_EQ(pts.size(), 10u);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_NEAR(pts[i].value(0), 0.1 * (i + 0.5), 1e-14);
  }
}

TEST(EnumerateLattice, OscillatorCalibrationAcrossH) {
  for (double h : {0.2, 0.1, 0.05, 0.013}) {
    const auto s = ho1d_spec(3.0);
    for (const auto& p : enumerate_lattice(s, h)) {
      const double n = p.value(0) / h - 0.5;
      EXPECT_NEAR(n, std::round(n), 1e-9) << h;
      EXPECT_LT(std::abs(p.value(0) - 0.5), 3.0 * h);
    }
  }
}

TEST(EnumerateLattice, HLGivesParityConstrainedLattice) {
  const double h = 0.1;
  const auto s = hl_spec(1.0, 0.3, v2(3.95, 3.95));
  const auto pts = enumerate_lattice(s, h);
  // oracle: (h(N+1), hm), |m| <= N, m = N mod 2, inside the open window
  std::set<std::pair<long, long>> expected;
  for (int N = 0; N < 40; ++N) {
    for (int m = -N; m <= N; m += 2) {
      const double E = h * (N + 1), L = h * m;
      if (std::abs(E - 1.0) < 0.395 && std::abs(L - 0.3) < 0.395) {
        expected.insert({std::lround(E * 1e6), std::lround(L * 1e6)});
      }
    }
  }
  EXPECT_EQ(rounded(pts, 1e6), expected);
  for (const auto& p : pts) {
    EXPECT_NEAR(p.value(0) / h, std::round(p.value(0) / h), 1e-9);
    EXPECT_NEAR(p.value(1) / h, std::round(p.value(1) / h), 1e-9);
  }
}

TEST(EnumerateLattice, ContainsE0ExactlyWhenIntegral) {
  // alpha / (2 pi h) + mu / 4 in Z: E0 = 0.55 at h = 0.1 is h(5 + 1/2)
  auto s = ho1d_spec(0.3);
  s.E0(0) = 0.55;
  s.alpha(0) = 2 * pi * 0.55;
  const auto pts = enumerate_lattice(s, 0.1);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_NEAR(pts[0].value(0), 0.55, 1e-14);
  s.E0(0) = 0.5;
  s.alpha(0) = pi;
  for (const auto& p : enumerate_lattice(s, 0.1)) EXPECT_GT(std::abs(p.value(0) - 0.5), 1e-3);
}

TEST(EnumerateLattice, EmptyWindowIsEmpty) {
  const auto s = ho1d_spec(0.2);  // window ]0.48, 0.52[ between 0.45 and 0.55
  EXPECT_TRUE(enumerate_lattice(s, 0.1).empty());
  EXPECT_THROW(enumerate_lattice(s, 0.0), InputError);
}

TEST(EnumerateLattice, UnimodularInvariance) {
  const auto s = hl_spec(1.0, 0.3, v2(3.95, 3.95));
  Eigen::Matrix2i U;
  U << 2, 1, 1, 1;
  const Mat Ud = U.cast<double>();
  LatticeSpec t = s;
  t.a = BasisChange(s.a.a() * Ud);
  t.alpha = Ud.transpose() * s.alpha;
  t.mu = U.transpose() * s.mu;
  t.delta = Ud.transpose() * s.delta;
  for (double h : {0.1, 0.037}) {
    const auto p1 = enumerate_lattice(s, h);
    const auto p2 = enumerate_lattice(t, h);
    ASSERT_EQ(p1.size(), p2.size());
    for (std::size_t i = 0; i < p1.size(); ++i) {
      EXPECT_LE((p1[i].value - p2[i].value).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(EnumerateLattice, SubprincipalShift) {
  // constant q1 = c on the oscillator shifts every level by h c
  auto s = ho1d_spec(5.0);
  const double c = 0.2;
  s.delta(0) = 2 * pi * c;
  const double h = 0.1;
  for (const auto& p : enumerate_lattice(s, h)) {
    const double n = (p.value(0) - h * c) / h - 0.5;
    EXPECT_NEAR(n, std::round(n), 1e-9);
  }
}

TEST(NearestLatticePoint, RecoversIndex) {
  const auto s = hl_spec(1.0, 0.3, v2(4.0, 4.0));
  for (const auto& p : enumerate_lattice(s, 0.05)) {
    const auto q = nearest_lattice_point(s, 0.05, p.value + v2(3e-3, -4e-3));
    EXPECT_EQ(q.index, p.index);
    EXPECT_LE((q.value - p.value).norm(), 1e-12);
  }
}

TEST(LatticeGap, DefaultWindow) {
  const auto s = hl_spec(1.0, 0.3, Vec());
  // nearest neighbours (h, h) apart in the checkerboard: gap h sqrt 2
  EXPECT_NEAR(min_lattice_gap(s, 0.1), 0.1 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(default_window_c(s)(0), 0.45 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(min_lattice_gap(ho1d_spec(1), 0.2), 0.2, 1e-15);
}
