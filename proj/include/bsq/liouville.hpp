#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

#include "bsq/validation.hpp"

namespace bsq {

/// Axis-aligned box in R^{2n}.
struct Box {
  Vec lo;
  Vec hi;
  double volume() const { return (hi - lo).prod(); }
};

struct LiouvilleOptions {
  std::size_t n_samples = 1000000;
  std::uint64_t seed = 42;
  double epsilon = 0.0;        // shell half-width; 0 picks 1e-3 |E0| + 1e-3
  std::size_t batch = 1 << 16;
  unsigned jobs = 1;
  bool richardson = true;      // repeat at epsilon / 2
  double min_acceptance = 1e-6;
  int max_box_growth = 4;      // times the box may grow by 1.5 when the shell touches it
  std::size_t pilot_samples = 1 << 18;
};

struct LiouvilleEstimate {
  double value = 0.0;          // int_{Sigma_0} dnu
  double stderr_ = 0.0;
  double surface = 0.0;        // int dS, Gram-weighted diagnostic
  double surface_stderr = 0.0;
  double epsilon = 0.0;
  double half_epsilon_value = 0.0;   // estimate at epsilon / 2 (0 if skipped)
  double half_epsilon_stderr = 0.0;
  std::size_t n_samples = 0;
  std::size_t accepted = 0;
  int box_growths = 0;
  Box box;
};

/// Bounding box of Sigma_0 from flow-spread level points, padded by `pad`
/// times the half-width.
inline Box level_bounding_box(const ClassicalSystem& sys, const Vec& E0, const PhasePoint& anchor,
                              std::size_t n_points = 256, std::uint64_t seed = 3,
                              double pad = 0.25) {
  auto pts = sample_level_points(sys, E0, anchor, n_points, seed);
  pts.push_back(anchor);
  const int d = 2 * sys.n;
  Box b{Vec::Constant(d, std::numeric_limits<double>::infinity()),
        Vec::Constant(d, -std::numeric_limits<double>::infinity())};
  for (const auto& p : pts) {
    const Vec z = p.packed();
    b.lo = b.lo.cwiseMin(z);
    b.hi = b.hi.cwiseMax(z);
  }
  const Vec c = 0.5 * (b.lo + b.hi);
  const Vec w = (0.5 * (b.hi - b.lo)).cwiseMax(1e-3) * (1.0 + pad);
  return {c - w, c + w};
}

namespace detail {

struct ShellTally {
  std::size_t n = 0;
  std::size_t hits = 0;
  std::size_t hits_half = 0;
  double gram = 0.0;
  double gram2 = 0.0;
  bool near_edge = false;
};

inline ShellTally shell_batch(const ClassicalSystem& sys, const Vec& E0, const Box& box,
                              double eps, std::size_t count, std::uint64_t seed,
                              std::uint64_t batch_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(batch_index),
                    static_cast<std::uint32_t>(batch_index >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Index d = box.lo.size();
  const Vec width = box.hi - box.lo;
  ShellTally t;
  Vec z(d);
  for (std::size_t i = 0; i < count; ++i) {
    for (Eigen::Index a = 0; a < d; ++a) z(a) = box.lo(a) + width(a) * u(rng);
    const double dev = (sys.symbol(z) - E0).cwiseAbs().maxCoeff();
    ++t.n;
    if (dev > eps) continue;
    ++t.hits;
    if (dev <= 0.5 * eps) ++t.hits_half;
    const Mat J = sys.jacobian(z);
    const double g = std::sqrt(std::max(0.0, (J * J.transpose()).determinant()));
    t.gram += g;
    t.gram2 += g * g;
    for (Eigen::Index a = 0; a < d; ++a) {
      const double rel = std::min(z(a) - box.lo(a), box.hi(a) - z(a)) / width(a);
      if (rel < 0.02) t.near_edge = true;
    }
  }
  return t;
}

}  // namespace detail

/// Monte Carlo estimate of the Liouville mass of Sigma_0. Uniform samples in
/// the box are kept when |q0 - E0|_inf <= eps; by the co-area formula the
/// kept fraction times vol(box) / (2 eps)^k tends to int dnu, and the same
/// count weighted by sqrt det(J J^T) tends to the surface measure.
/// Batches carry their own seeds, so results do not depend on `jobs`.
inline LiouvilleEstimate liouville_volume(const ClassicalSystem& sys, const Vec& E0,
                                          Box box, const LiouvilleOptions& opt = {}) {
  if (E0.size() != sys.k) throw InputError("E0 must have k components");
  if (box.lo.size() != 2 * sys.n || box.hi.size() != 2 * sys.n) {
    throw InputError("box dimension does not match phase space");
  }
  if (opt.n_samples == 0 || opt.batch == 0) throw InputError("need a positive sample count");
  const double eps = opt.epsilon > 0 ? opt.epsilon : 1e-3 * E0.norm() + 1e-3;
  const std::size_t n_batches = (opt.n_samples + opt.batch - 1) / opt.batch;
  auto grow = [&box] {
    const Vec c = 0.5 * (box.lo + box.hi);
    const Vec w = 0.75 * (box.hi - box.lo);
    box = {c - w, c + w};
  };
  // pilot pass of fixed size settles the box independently of n_samples
  int growths = 0;
  while (growths < opt.max_box_growth &&
         detail::shell_batch(sys, E0, box, eps, opt.pilot_samples, opt.seed, ~0ull).near_edge) {
    grow();
    ++growths;
  }
  for (;; ++growths) {
    std::vector<detail::ShellTally> tallies(n_batches);
    const unsigned jobs = std::max(1u, std::min<unsigned>(opt.jobs, n_batches));
    auto work = [&](unsigned w) {
      for (std::size_t b = w; b < n_batches; b += jobs) {
        const std::size_t count = std::min(opt.batch, opt.n_samples - b * opt.batch);
        tallies[b] = detail::shell_batch(sys, E0, box, eps, count, opt.seed, b);
      }
    };
    if (jobs == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(work, w);
      for (auto& th : pool) th.join();
    }
    detail::ShellTally all;
    for (const auto& t : tallies) {  // fixed order keeps sums bit-stable
      all.n += t.n;
      all.hits += t.hits;
      all.hits_half += t.hits_half;
      all.gram += t.gram;
      all.gram2 += t.gram2;
      all.near_edge = all.near_edge || t.near_edge;
    }
    const double N = static_cast<double>(all.n);
    if (static_cast<double>(all.hits) < opt.min_acceptance * N || all.hits == 0) {
      throw SamplerStarvationError("thin-shell acceptance rate below " +
                                   std::to_string(opt.min_acceptance));
    }
    if (all.near_edge) {
      if (growths >= opt.max_box_growth) {
        throw PreconditionError("level set reaches the sampling box boundary; enlarge the box");
      }
      grow();
      continue;
    }
    const double V = box.volume();
    auto mass = [&](std::size_t hits, double e, double& se) {
      const double f = static_cast<double>(hits) / N;
      const double scale = V / std::pow(2 * e, sys.k);
      se = scale * std::sqrt(f * (1 - f) / N);
      return scale * f;
    };
    LiouvilleEstimate out;
    out.epsilon = eps;
    out.n_samples = all.n;
    out.accepted = all.hits;
    out.box = box;
    out.box_growths = growths;
    out.value = mass(all.hits, eps, out.stderr_);
    if (opt.richardson && all.hits_half > 0) {
      out.half_epsilon_value = mass(all.hits_half, 0.5 * eps, out.half_epsilon_stderr);
    }
    const double scale = V / std::pow(2 * eps, sys.k);
    const double m1 = all.gram / N, m2 = all.gram2 / N;
    out.surface = scale * m1;
    out.surface_stderr = scale * std::sqrt(std::max(0.0, m2 - m1 * m1) / N);
    return out;
  }
}

/// Leading multiplicity coefficient l0 = (2pi)^{-n} int dnu / |det a|, the
/// density of the joint spectrum per unit cell of the lattice.
inline double leading_multiplicity(double liouville_mass, int n, double det_a) {
  return liouville_mass / std::pow(2 * std::numbers::pi, n) / std::abs(det_a);
}

}  // namespace bsq
