#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "bsq/dynamics.hpp"
#include "bsq/level_set.hpp"

namespace bsq {

/// Random points of Sigma_0 reached from `anchor`: a Gaussian kick, projection
/// back onto the level, then a random joint-flow time in [0, t_spread]^k.
inline std::vector<PhasePoint> sample_level_points(const ClassicalSystem& sys, const Vec& E0,
                                                   const PhasePoint& anchor, std::size_t count,
                                                   std::uint64_t seed, double tol_level = 1e-10,
                                                   double t_spread = 2 * std::numbers::pi,
                                                   const FlowOptions& flow_opt = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, t_spread);
  const Vec z0 = anchor.packed();
  const double scale = 0.2 * (z0.norm() + 0.1);
  std::vector<PhasePoint> out;
  out.reserve(count);
  LevelPointOptions lp;
  lp.tol_level = tol_level;
  for (std::size_t i = 0; i < count; ++i) {
    Vec z = z0;
    for (Eigen::Index a = 0; a < z.size(); ++a) z(a) += scale * gauss(rng);
    Vec t(sys.k);
    for (int j = 0; j < sys.k; ++j) t(j) = unif(rng);
    PhasePoint q = find_level_point(sys, E0, PhasePoint::from_packed(z), lp);
    q = flow(sys, t, q, flow_opt).end;
    out.push_back(std::move(q));
  }
  return out;
}

struct ValidationOptions {
  double tol_rank = 1e-6;
  double probe_radius = 1e6;   // properness probe: flow orbits must stay inside
  double flow_horizon = 4 * std::numbers::pi;
  int samples_per_orbit = 16;
  std::uint64_t seed = 1;
  FlowOptions flow;
};

struct ValidationReport {
  double min_singular_value = 0.0;  // regularity proxy
  double max_norm = 0.0;            // properness proxy
  std::size_t n_points = 0;
  bool regular = false;
  bool bounded = false;
  bool connected_asserted = false;
  bool ok = false;
  std::string message;
};

/// Probes (H1) on Sigma_0: rank of the Jacobian of q0 at sampled points and
/// boundedness of joint-flow orbits through them. A failure is reported, not
/// thrown.
inline ValidationReport validate_regular_proper(const ClassicalSystem& sys,
                                                const EnergyLevel& level, std::size_t n_samples,
                                                const ValidationOptions& opt = {}) {
  if (level.seed_points.empty()) throw InputError("energy level has no seed points");
  if (level.E0.size() != sys.k) throw InputError("E0 must have k components");
  std::vector<Vec> points;
  for (const auto& seed : level.seed_points) {
    if ((sys.symbol(seed.packed()) - level.E0).norm() > level.tol_level) {
      throw InputError("seed point is not on the energy level");
    }
    points.push_back(seed.packed());
  }
  if (n_samples > 0) {
    // near a critical level the projection may stall; the seeds still probe it
    try {
      const auto extra = sample_level_points(sys, level.E0, level.seed_points.front(), n_samples,
                                             opt.seed, level.tol_level, 2 * std::numbers::pi,
                                             opt.flow);
      for (const auto& q : extra) points.push_back(q.packed());
    } catch (const RootFindError&) {
    }
  }
  // flow-sampled orbit points through every seed
  std::vector<double> times;
  for (int i = 1; i <= opt.samples_per_orbit; ++i) {
    times.push_back(opt.flow_horizon * i / opt.samples_per_orbit);
  }
  const std::size_t n_base = points.size();
  for (std::size_t i = 0; i < std::min<std::size_t>(n_base, level.seed_points.size() + 4); ++i) {
    for (int j = 0; j < sys.k; ++j) {
      for (auto& z : sample_component_flow(sys, j, points[i], times, opt.flow)) {
        points.push_back(std::move(z));
      }
    }
  }

  ValidationReport rep;
  rep.n_points = points.size();
  rep.min_singular_value = std::numeric_limits<double>::infinity();
  for (const auto& z : points) {
    rep.min_singular_value = std::min(rep.min_singular_value, jacobian_min_singular_value(sys, z));
    rep.max_norm = std::max(rep.max_norm, z.norm());
  }
  rep.regular = rep.min_singular_value >= opt.tol_rank;
  rep.bounded = rep.max_norm <= opt.probe_radius;
  rep.connected_asserted = sys.connected_levels && level.connectedness_asserted;
  rep.ok = rep.regular && rep.bounded;
  if (!rep.regular) {
    rep.message = "Jacobian of q0 is rank deficient on Sigma_0 (min singular value " +
                  std::to_string(rep.min_singular_value) + ")";
  } else if (!rep.bounded) {
    rep.message = "flow orbit left the probe radius";
  }
  return rep;
}

/// Builds an EnergyLevel by projecting `guess` (or the model default) onto q0 = E0.
inline EnergyLevel make_energy_level(const ClassicalSystem& sys, const Vec& E0,
                                     const Vec& guess = Vec(), double tol_level = 1e-10) {
  if (E0.size() != sys.k) throw InputError("E0 must have k components");
  const Vec g = guess.size() > 0 ? guess : sys.default_guess(E0);
  sys.check_point(g);
  EnergyLevel level;
  level.E0 = E0;
  level.tol_level = tol_level;
  level.connectedness_asserted = sys.connected_levels;
  LevelPointOptions lp;
  lp.tol_level = tol_level;
  level.seed_points.push_back(find_level_point(sys, E0, PhasePoint::from_packed(g), lp));
  return level;
}

}  // namespace bsq
