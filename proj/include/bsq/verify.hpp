#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bsq/lattice.hpp"
#include "bsq/quantum/joint_spectrum.hpp"

namespace bsq {

struct MatchPair {
  SpectralPoint point;
  PredictedPoint lattice;
  double deviation = 0.0;
};

struct MatchReport {
  double h = 0.0;
  double reject_radius = 0.0;
  Window window;
  std::vector<MatchPair> pairs;
  std::vector<SpectralPoint> unmatched_spectrum;
  std::vector<PredictedPoint> unmatched_lattice;
  double max_deviation = 0.0;
};

/// Deviations below this are rounding, not physics.
inline constexpr double kDeviationFloor = 1e-12;

/// C h^2, kept below half of the smallest lattice gap.
inline double reject_radius(const LatticeSpec& spec, double h, double C = 10.0) {
  return std::min(C * h * h, 0.49 * min_lattice_gap(spec, h));
}

inline Window lattice_window(const LatticeSpec& spec, double h) {
  return {spec.E0, window_half_widths(spec, h)};
}

/// Nearest-lattice-point assignment of every spectral point in the window.
inline MatchReport match_spectrum(const LatticeSpec& spec, double h, const JointSpectrum& spectrum,
                                  double radius) {
  if (!(h > 0)) throw InputError("h must be positive");
  MatchReport rep;
  rep.h = h;
  rep.reject_radius = radius;
  rep.window = lattice_window(spec, h);
  const auto lattice = enumerate_lattice(spec, h);
  std::vector<bool> hit(lattice.size(), false);
  for (const auto& p : spectrum.points) {
    if (!rep.window.contains(p.lambda)) continue;
    const auto q = nearest_lattice_point(spec, h, p.lambda);
    const double dev = (p.lambda - q.value).norm();
    if (dev > radius) {
      rep.unmatched_spectrum.push_back(p);
      continue;
    }
    rep.pairs.push_back({p, q, dev});
    rep.max_deviation = std::max(rep.max_deviation, dev);
    for (std::size_t i = 0; i < lattice.size(); ++i) {
      if (lattice[i].index == q.index) hit[i] = true;
    }
  }
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    if (!hit[i]) rep.unmatched_lattice.push_back(lattice[i]);
  }
  return rep;
}

struct ScalingFit {
  std::vector<double> h_list;
  std::vector<double> max_deviations;
  bool exact_match = false;    // every deviation at the numerical floor
  std::size_t n_fitted = 0;
  double fitted_exponent = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double fit_residual = std::numeric_limits<double>::quiet_NaN();  // rms in log space
  bool monotone = true;        // deviations decrease along the h grid
};

/// Least-squares slope of log(max deviation) against log h.
inline ScalingFit fit_deviation_scaling(const std::vector<MatchReport>& reports) {
  if (reports.size() < 3) throw InputError("scaling fit needs at least three values of h");
  ScalingFit fit;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (i > 0 && !(reports[i].h < reports[i - 1].h)) {
      throw InputError("h values must be strictly decreasing");
    }
    fit.h_list.push_back(reports[i].h);
    fit.max_deviations.push_back(reports[i].max_deviation);
    if (i > 0 && reports[i].max_deviation > reports[i - 1].max_deviation) fit.monotone = false;
  }
  std::vector<double> x, y;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (fit.max_deviations[i] > kDeviationFloor) {
      x.push_back(std::log(fit.h_list[i]));
      y.push_back(std::log(fit.max_deviations[i]));
    }
  }
  fit.n_fitted = x.size();
  if (x.size() < 2) {
    fit.exact_match = true;
    return fit;
  }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  fit.fitted_exponent = sxy / sxx;
  fit.intercept = my - fit.fitted_exponent * mx;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.fitted_exponent * x[i]);
    ss += r * r;
  }
  fit.fit_residual = std::sqrt(ss / n);
  return fit;
}

struct MultiplicityEntry {
  IVec index;
  Vec center;
  int count = 0;
  double predicted = 0.0;
  double relative_error = 0.0;
};

struct MultiplicityReport {
  double h = 0.0;
  double cube_half_width = 0.0;
  double l0 = 0.0;
  double predicted = 0.0;      // l0 h^{k-n}
  std::vector<MultiplicityEntry> entries;
};

/// Eigenvalue counts (with multiplicity) in cubes of half-width C h^2 around
/// every lattice point of the window, against l0 h^{k-n}.
inline MultiplicityReport multiplicity_profile(const LatticeSpec& spec, double h,
                                               const JointSpectrum& spectrum, double C, double l0,
                                               int n) {
  if (!(h > 0) || !(C > 0)) throw InputError("h and C must be positive");
  const double half = C * h * h;
  const double gap = min_lattice_gap(spec, h);
  if (half >= 0.5 * gap) {
    throw WindowOverlapError("cubes of half-width " + std::to_string(half) +
                             " overlap (lattice gap " + std::to_string(gap) + ")");
  }
  MultiplicityReport rep;
  rep.h = h;
  rep.cube_half_width = half;
  rep.l0 = l0;
  rep.predicted = l0 * std::pow(h, spec.k() - n);
  for (const auto& q : enumerate_lattice(spec, h)) {
    MultiplicityEntry e;
    e.index = q.index;
    e.center = q.value;
    for (const auto& p : spectrum.points) {
      if ((p.lambda - q.value).cwiseAbs().maxCoeff() <= half) e.count += p.multiplicity;
    }
    e.predicted = rep.predicted;
    e.relative_error = std::abs(e.count - e.predicted) / e.predicted;
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

/// Entry whose lattice point is closest to `y`; null when the report is empty.
inline const MultiplicityEntry* nearest_entry(const MultiplicityReport& rep, const Vec& y) {
  const MultiplicityEntry* best = nullptr;
  double bd = std::numeric_limits<double>::infinity();
  for (const auto& e : rep.entries) {
    const double d = (e.center - y).norm();
    if (d < bd) {
      bd = d;
      best = &e;
    }
  }
  return best;
}

/// kappa = max over h and cubes of |N h^{n-k} - l0| / h.
inline double multiplicity_constant(const std::vector<MultiplicityReport>& reps, int k, int n) {
  double kappa = 0.0;
  for (const auto& r : reps) {
    for (const auto& e : r.entries) {
      const double scaled = e.count * std::pow(r.h, n - k);
      kappa = std::max(kappa, std::abs(scaled - r.l0) / r.h);
    }
  }
  return kappa;
}

}  // namespace bsq
