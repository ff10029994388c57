#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "bsq/cycle_invariants.hpp"
#include "bsq/liouville.hpp"

using namespace bsq;
constexpr double pi = std::numbers::pi;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Mat cols2(const Vec& a, const Vec& b) {
  Mat B(2, 2);
  B << a, b;
  return B;
}

PhasePoint hl_point(double E, double l) {
  const auto sys = models::ho2d_HL();
  return make_energy_level(sys, v2(E, l)).seed_points.front();
}

}  // namespace

TEST(PeriodLattice, OscillatorHasSinglePeriodTwoPi) {
  const auto sys = models::ho1d();
  const PhasePoint p(Vec::Constant(1, 1.0), Vec::Zero(1));
  const auto lat = detect_period_lattice(sys, Vec::Constant(1, 0.5), p);
  ASSERT_EQ(lat.basis.rows(), 1);
  EXPECT_NEAR(lat.basis(0, 0), 2 * pi, 1e-9);
  EXPECT_LE(lat.return_residuals(0), 1e-9);
  EXPECT_NEAR(lat.a.a()(0, 0), 1.0, 1e-9);
}

TEST(PeriodLattice, HLLatticeContainsHalfPeriods) {
  const auto sys = models::ho2d_HL();
  const auto p = hl_point(1.0, 0.3);
  const auto lat = detect_period_lattice(sys, v2(1.0, 0.3), p);
  const Mat expected = cols2(v2(pi, pi), v2(pi, -pi));
  EXPECT_TRUE(unimodularly_equivalent(expected, lat.basis)) << lat.basis;
  EXPECT_FALSE(unimodularly_equivalent(cols2(v2(2 * pi, 0), v2(0, 2 * pi)), lat.basis));
  EXPECT_NEAR(std::abs(lat.a.det()), 0.5, 1e-9);
  EXPECT_LE(lat.return_residuals.maxCoeff(), 1e-9);
}

TEST(PeriodLattice, IrrationalRatioHasNoPeriod) {
  const auto sys = models::ho2d_aniso();
  const Vec E0 = Vec::Constant(1, 1.0);
  const auto level = make_energy_level(sys, E0);
  EXPECT_THROW(detect_period_lattice(sys, E0, level.seed_points.front()), NoPeriodError);
}

TEST(PeriodLattice, BasisIndependentOfSeedPoint) {
  const auto sys = models::radial2d_HL({{"lambda", 0.1}});
  const Vec E0 = v2(1.0, 0.3);
  const auto level = make_energy_level(sys, E0);
  const auto other = sample_level_points(sys, E0, level.seed_points.front(), 1, 99).front();
  PeriodSearchOptions opt;
  opt.t_max = 7;
  const auto l1 = detect_period_lattice(sys, E0, level.seed_points.front(), opt);
  opt.seed = 1234;
  const auto l2 = detect_period_lattice(sys, E0, other, opt);
  EXPECT_TRUE(unimodularly_equivalent(l1.basis, l2.basis, 1e-6)) << l1.basis << "\n" << l2.basis;
  EXPECT_LE(l1.return_residuals.maxCoeff(), 1e-8);
}

TEST(LatticeReduction, UnimodularTransformRecovered) {
  const Mat B = cols2(v2(pi, pi), v2(pi, -pi));
  Eigen::Matrix2i U;
  U << 2, 1, 5, 3;  // det 1
  const Mat B2 = B * U.cast<double>();
  const auto R = unimodular_transform(B, B2);
  ASSERT_EQ(R.size(), 4);
  EXPECT_EQ(R, U);
  EXPECT_TRUE(unimodularly_equivalent(lll_reduce(B2), B));
  Eigen::Matrix2i U2;
  U2 << 2, 0, 0, 1;
  EXPECT_FALSE(unimodularly_equivalent(B, B * U2.cast<double>()));
}

TEST(CycleAction, OscillatorEnclosedArea) {
  const auto sys = models::ho1d();
  const PhasePoint p(Vec::Constant(1, 1.0), Vec::Zero(1));
  EXPECT_NEAR(cycle_action(sys, p, Vec::Constant(1, 2 * pi)), pi, 1e-9);
  EXPECT_EQ(cycle_action(sys, p, Vec::Zero(1)), 0.0);
  EXPECT_THROW(cycle_action(sys, p, Vec::Constant(1, 1.0)), PreconditionError);
}

TEST(CycleAction, RotationCycleCarriesAngularMomentum) {
  const auto sys = models::ho2d_HL();
  const auto p = hl_point(1.0, 0.3);
  EXPECT_NEAR(cycle_action(sys, p, v2(0, 2 * pi)), 2 * pi * 0.3, 1e-9);
  EXPECT_NEAR(cycle_action(sys, p, v2(pi, pi)), pi * 1.3, 1e-8);
  EXPECT_NEAR(cycle_action(sys, p, v2(pi, -pi)), pi * 0.7, 1e-8);
}

TEST(CycleAction, BasePointIndependentOnAnharmonicModel) {
  const auto sys = models::radial2d_HL({{"lambda", 0.1}});
  const Vec E0 = v2(1.0, 0.3);
  const auto level = make_energy_level(sys, E0);
  PeriodSearchOptions po;
  po.t_max = 7;
  const auto lat = detect_period_lattice(sys, E0, level.seed_points.front(), po);
  const auto inv = compute_cycle_invariants(sys, E0, level.seed_points.front(), lat);
  EXPECT_EQ(inv.n_base_points, 5u);
  EXPECT_LE(inv.alpha_spread.maxCoeff(), 1e-6);
}

TEST(Subprincipal, ZeroWhenAbsent) {
  const auto sys = models::ho1d();
  const PhasePoint p(Vec::Constant(1, 1.0), Vec::Zero(1));
  const auto s = subprincipal_cycle_integral(sys, Vec::Constant(1, 0.5), p, Vec::Constant(1, 2 * pi));
  EXPECT_EQ(s.value, 0.0);
  EXPECT_TRUE(s.consistent);
}

TEST(Subprincipal, ConstantSymbolGivesTwoPiC) {
  const auto sys = models::ho1d({{"q1_const", 0.7}});
  const PhasePoint p(Vec::Constant(1, 1.0), Vec::Zero(1));
  const auto s = subprincipal_cycle_integral(sys, Vec::Constant(1, 0.5), p, Vec::Constant(1, 2 * pi));
  EXPECT_NEAR(s.value, 2 * pi * 0.7, 1e-9);
  EXPECT_TRUE(s.consistent);
}

TEST(Subprincipal, OddSymbolAveragesToZero) {
  const auto sys = models::ho1d({{"q1_x", 1.0}});
  const PhasePoint p(Vec::Constant(1, 1.0), Vec::Zero(1));
  const auto s = subprincipal_cycle_integral(sys, Vec::Constant(1, 0.5), p, Vec::Constant(1, 2 * pi));
  EXPECT_NEAR(s.value, 0.0, 1e-9);
  EXPECT_LE(s.spread, 1e-8);
}

TEST(Maslov, OscillatorEnergyCycleIsTwo) {
  const auto sys = models::ho1d();
  const PhasePoint p(Vec::Constant(1, 1.0), Vec::Zero(1));
  const auto loop = lambda1_frame_loop(sys, p, Vec::Constant(1, 2 * pi), 128);
  EXPECT_TRUE(loop.closed);
  EXPECT_LE(loop.isotropy_residual, 1e-8);
  EXPECT_EQ(loop.samples.front().rows(), 4);
  EXPECT_EQ(loop.samples.front().cols(), 2);
  EXPECT_EQ(maslov_index(loop), 2);
}

TEST(Maslov, RotationCycleIsZero) {
  const auto sys = models::ho2d_HL();
  const auto p = hl_point(1.0, 0.3);
  EXPECT_EQ(cycle_maslov_index(sys, p, v2(0, 2 * pi)), 0);
  const auto loop = lambda1_frame_loop(sys, p, v2(pi, pi), 128);
  EXPECT_TRUE(loop.closed);
  EXPECT_EQ(loop.samples.front().rows(), 8);
  EXPECT_LE(loop.isotropy_residual, 1e-8);
  EXPECT_EQ(maslov_index(loop), 2);
  EXPECT_EQ(cycle_maslov_index(sys, p, v2(pi, -pi)), 2);
}

TEST(Maslov, ConstantLoopIsZero) {
  const auto sys = models::ho1d();
  const PhasePoint p(Vec::Constant(1, 1.0), Vec::Zero(1));
  const auto loop = lambda1_frame_loop(sys, p, Vec::Zero(1), 8);
  EXPECT_TRUE(loop.closed);
  EXPECT_EQ(maslov_index(loop), 0);
}

TEST(Maslov, OpenLoopRejected) {
  const auto sys = models::ho1d();
  const PhasePoint p(Vec::Constant(1, 1.0), Vec::Zero(1));
  const auto loop = lambda1_frame_loop(sys, p, Vec::Constant(1, 1.0), 32);
  EXPECT_FALSE(loop.closed);
  EXPECT_THROW(maslov_index(loop), PreconditionError);
}

TEST(Maslov, InvariantUnderDoubledSampling) {
  const auto sys = models::ho2d_HL();
  const auto p = hl_point(1.0, 0.3);
  const Vec T = v2(3 * pi, pi);
  EXPECT_EQ(maslov_index(lambda1_frame_loop(sys, p, T, 256)),
            maslov_index(lambda1_frame_loop(sys, p, T, 512)));
}

TEST(Maslov, LinearInLatticeCoordinates) {
  const auto sys = models::ho2d_HL();
  const Vec E0 = v2(1.0, 0.3);
  const auto p = hl_point(1.0, 0.3);
  const auto lat = detect_period_lattice(sys, E0, p);
  const int m1 = cycle_maslov_index(sys, p, lat.basis.col(0));
  const int m2 = cycle_maslov_index(sys, p, lat.basis.col(1));
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> pick(-2, 2);
  for (int trial = 0; trial < 4; ++trial) {
    const int z1 = pick(rng), z2 = pick(rng);
    const Vec T = z1 * lat.basis.col(0) + z2 * lat.basis.col(1);
    EXPECT_EQ(cycle_maslov_index(sys, p, T, 512), z1 * m1 + z2 * m2) << z1 << "," << z2;
  }
}

TEST(Maslov, AnharmonicCyclesMatchOscillatorLimit) {
  const Vec E0 = v2(1.0, 0.3);
  PeriodSearchOptions po;
  po.t_max = 7;
  // lambda = 0: mu = 2 on both cycles of the (pi/2, pi), (pi/2, -pi) basis
  const Mat B0 = cols2(v2(pi / 2, pi), v2(pi / 2, -pi));
  const IVec mu0 = IVec::Constant(2, 2);
  for (double lam : {0.0, 0.1}) {
    const auto sys = models::radial2d_HL({{"lambda", lam}});
    const auto level = make_energy_level(sys, E0);
    const auto lat = detect_period_lattice(sys, E0, level.seed_points.front(), po);
    const auto inv = compute_cycle_invariants(sys, E0, level.seed_points.front(), lat);
    // the quartic term deforms the periods continuously; integer coordinates persist
    const Mat U = B0.fullPivLu().solve(lat.basis).array().round().matrix();
    ASSERT_NEAR(std::abs(U.determinant()), 1.0, 1e-9) << lat.basis;
    const IVec expected = U.transpose().cast<int>() * mu0;
    EXPECT_EQ(inv.mu, expected) << "lambda " << lam;
  }
}

TEST(Liouville, OscillatorLevelCircleHasMassTwoPi) {
  const auto sys = models::ho1d();
  const Vec E0 = Vec::Constant(1, 0.5);
  const PhasePoint p(Vec::Constant(1, 1.0), Vec::Zero(1));
  LiouvilleOptions opt;
  opt.n_samples = 200000;
  opt.epsilon = 0.01;
  const auto est = liouville_volume(sys, E0, level_bounding_box(sys, E0, p), opt);
  EXPECT_NEAR(est.value, 2 * pi, 3 * est.stderr_);
  // |grad q0| = 1 on the unit circle: surface measure equals Liouville mass
  EXPECT_NEAR(est.surface, 2 * pi, 4 * est.surface_stderr + 0.02);
}

TEST(Liouville, ThreeSphereShell) {
  const auto sys = models::ho2d_k1();
  const Vec E0 = Vec::Constant(1, 1.0);
  const auto level = make_energy_level(sys, E0);
  LiouvilleOptions opt;
  opt.n_samples = 400000;
  opt.epsilon = 0.02;
  const auto est = liouville_volume(sys, E0, level_bounding_box(sys, E0, level.seed_points.front()), opt);
  EXPECT_NEAR(est.value, 4 * pi * pi, 3 * est.stderr_);
  EXPECT_NEAR(leading_multiplicity(est.value, 2, 1.0), 1.0, 3 * est.stderr_ / (4 * pi * pi));
  EXPECT_NEAR(est.half_epsilon_value, 4 * pi * pi, 3 * est.half_epsilon_stderr);
}

TEST(Liouville, HLMassMatchesBasisChange) {
  const auto sys = models::ho2d_HL();
  const Vec E0 = v2(1.0, 0.3);
  const auto p = hl_point(1.0, 0.3);
  LiouvilleOptions opt;
  opt.n_samples = 1 << 20;
  opt.epsilon = 0.02;
  const auto est = liouville_volume(sys, E0, level_bounding_box(sys, E0, p), opt);
  // (2 pi)^-2 int dnu = |det a| = 1/2
  EXPECT_NEAR(est.value, 2 * pi * pi, 3 * est.stderr_);
  EXPECT_NEAR(leading_multiplicity(est.value, 2, 0.5), 1.0, 3 * est.stderr_ / (2 * pi * pi));
}

TEST(Liouville, StandardErrorScalesAsInverseRootN) {
  const auto sys = models::ho2d_k1();
  const Vec E0 = Vec::Constant(1, 1.0);
  const auto level = make_energy_level(sys, E0);
  const Box box = level_bounding_box(sys, E0, level.seed_points.front());
  LiouvilleOptions opt;
  opt.epsilon = 0.02;
  std::vector<double> se;
  for (std::size_t n : {10000u, 100000u, 1000000u}) {
    opt.n_samples = n;
    se.push_back(liouville_volume(sys, E0, box, opt).stderr_);
  }
  for (std::size_t i = 1; i < se.size(); ++i) {
    const double ratio = se[i - 1] / se[i];
    EXPECT_GT(ratio, std::sqrt(10.0) / 2);
    EXPECT_LT(ratio, std::sqrt(10.0) * 2);
  }
}

TEST(Liouville, ResultIndependentOfThreadCount) {
  const auto sys = models::ho2d_k1();
  const Vec E0 = Vec::Constant(1, 1.0);
  const auto level = make_energy_level(sys, E0);
  const Box box = level_bounding_box(sys, E0, level.seed_points.front());
  LiouvilleOptions opt;
  opt.n_samples = 100000;
  opt.batch = 8192;
  opt.epsilon = 0.02;
  const auto a = liouville_volume(sys, E0, box, opt);
  opt.jobs = 3;
  const auto b = liouville_volume(sys, E0, box, opt);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.surface, b.surface);
}

TEST(Liouville, StarvationAndSmallBox) {
  const auto sys = models::ho1d();
  const Vec E0 = Vec::Constant(1, 0.5);
  LiouvilleOptions opt;
  opt.n_samples = 1000;
  Box far{Vec::Constant(2, 10.0), Vec::Constant(2, 11.0)};
  EXPECT_THROW(liouville_volume(sys, E0, far, opt), SamplerStarvationError);
  Box tight{Vec::Constant(2, -0.9), Vec::Constant(2, 0.9)};
  opt.n_samples = 100000;
  opt.epsilon = 0.05;
  opt.max_box_growth = 0;
  EXPECT_THROW(liouville_volume(sys, E0, tight, opt), PreconditionError);
  opt.max_box_growth = 4;
  const auto grown = liouville_volume(sys, E0, tight, opt);
  EXPECT_GE(grown.box_growths, 1);
  EXPECT_NEAR(grown.value, 2 * pi, 3 * grown.stderr_);
}
