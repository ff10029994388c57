#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bsq/config.hpp"
#include "bsq/cycle_invariants.hpp"
#include "bsq/lattice.hpp"
#include "bsq/liouville.hpp"
#include "bsq/period_lattice.hpp"
#include "bsq/quantum/joint_spectrum.hpp"
#include "bsq/quantum/operators.hpp"
#include "bsq/validation.hpp"
#include "bsq/verify.hpp"

#ifndef BSQ_VERSION
#define BSQ_VERSION "0.0.0"
#endif

namespace bsq {

enum class RunMode { full, validate, invariants, spectrum };

inline const char* mode_name(RunMode m) {
  switch (m) {
    case RunMode::validate: return "validate";
    case RunMode::invariants: return "invariants";
    case RunMode::spectrum: return "spectrum";
    default: return "run";
  }
}

struct RunOptions {
  RunMode mode = RunMode::full;
  unsigned jobs = 1;
  std::ostream* log = nullptr;
};

struct Diagnostic {
  std::string hypothesis;
  std::string detail;
  std::string stage;
};

struct HResult {
  double h = 0.0;
  Window window;
  std::vector<PredictedPoint> lattice;
  std::optional<JointSpectrum> spectrum;
  std::optional<MatchReport> match;
  std::optional<MultiplicityReport> multiplicity;
  std::string multiplicity_error;
  std::size_t operator_dimension = 0;
};

struct ResultBundle {
  std::string schema = "bsq.result/1";
  std::string code_version = BSQ_VERSION;
  std::string mode = "run";
  ExperimentConfig config;
  std::string config_hash;
  std::optional<Diagnostic> violation;
  std::optional<ValidationReport> validation;
  std::optional<PeriodLattice> periods;
  std::optional<CycleInvariants> invariants;
  std::optional<LiouvilleEstimate> liouville;
  double l0 = 0.0;       // (2pi)^{-n} int dnu / |det a|, per lattice cell
  double l0_total = 0.0; // (2pi)^{-n} int dnu
  std::optional<LatticeSpec> lattice;
  std::vector<HResult> per_h;
  std::optional<ScalingFit> scaling;
  std::optional<double> kappa;
};

namespace detail {

/// Runs body(i) for i in [0, n) on up to `jobs` threads; the first exception
/// (lowest index) is rethrown.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> errs(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  const unsigned t = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (t == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errs) {
    if (e) std::rethrow_exception(e);
  }
}

inline Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

/// validate hypotheses -> periods -> alpha, mu, delta, l0 -> lattice ->
/// per h: discretize, joint spectrum, match, multiplicity -> scaling fit.
/// A hypothesis violation stops the run and is returned in `violation`.
inline ResultBundle run_experiment(const ExperimentConfig& cfg, const RunOptions& ro = {}) {
  validate_config(cfg);
  ResultBundle b;
  b.mode = mode_name(ro.mode);
  b.config = cfg;
  b.config_hash = config_hash(cfg);
  auto log = [&](const std::string& msg) {
    if (ro.log) *ro.log << "[" << b.mode << "] " << msg << "\n";
  };
  std::string stage = "setup";
  FlowOptions flow;
  flow.tol_flow = cfg.tol.tol_flow;
  const Vec E0 = detail::to_vec(cfg.E0);

  try {
    const ClassicalSystem sys = make_system(cfg.model, cfg.params);
    if (E0.size() != sys.k) throw ConfigError("E0 must have k = " + std::to_string(sys.k) + " entries");

    if (ro.mode != RunMode::spectrum) {
      stage = "validate";
      log("validating hypotheses at E0");
      const EnergyLevel level =
          make_energy_level(sys, E0, detail::to_vec(cfg.guess), cfg.tol.tol_level);
      ValidationOptions vo;
      vo.tol_rank = cfg.tol.tol_rank;
      vo.probe_radius = cfg.validation.probe_radius;
      vo.flow = flow;
      b.validation = validate_regular_proper(sys, level, cfg.validation.n_samples, vo);
      if (!b.validation->ok) throw HypothesisViolation("H1", b.validation->message);
      if (!b.validation->connected_asserted) {
        throw HypothesisViolation("H4", "model does not assert connected level sets");
      }
      if (ro.mode == RunMode::validate) return b;
      const PhasePoint p = level.seed_points.front();

      stage = "periods";
      log("detecting the period lattice");
      PeriodSearchOptions po;
      po.t_max = cfg.periods.t_max;
      po.grid = cfg.periods.grid;
      po.n_verify = cfg.periods.n_verify;
      po.seed = cfg.periods.seed;
      po.tol_period = cfg.tol.tol_period;
      po.tol_verify = cfg.tol.tol_verify;
      po.tol_level = cfg.tol.tol_level;
      po.flow = flow;
      try {
        b.periods = detect_period_lattice(sys, E0, p, po);
      } catch (const NoPeriodError& e) {
        throw HypothesisViolation("H2", e.what());
      }

      stage = "invariants";
      log("computing actions, Maslov indices and subprincipal integrals");
      InvariantOptions io;
      io.n_frames = cfg.invariants.n_frames;
      io.n_base_points = cfg.invariants.n_base_points;
      io.tol_period = cfg.tol.tol_period;
      io.tol_subprincipal = cfg.tol.tol_subprincipal;
      io.tol_level = cfg.tol.tol_level;
      io.flow = flow;
      b.invariants = compute_cycle_invariants(sys, E0, p, *b.periods, io);
      if (b.invariants->alpha_spread.size() && b.invariants->alpha_spread.maxCoeff() > cfg.tol.tol_action) {
        throw HypothesisViolation("H2", "cycle actions depend on the base point (spread " +
                                            std::to_string(b.invariants->alpha_spread.maxCoeff()) + ")");
      }

      stage = "liouville";
      log("estimating the Liouville mass");
      LiouvilleOptions lo;
      lo.n_samples = cfg.mc.n_samples;
      lo.seed = cfg.mc.seed;
      lo.epsilon = cfg.mc.epsilon;
      lo.jobs = ro.jobs;
      b.liouville = liouville_volume(sys, E0, level_bounding_box(sys, E0, p), lo);
      b.l0_total = b.liouville->value / std::pow(2 * std::numbers::pi, sys.n);
      b.l0 = leading_multiplicity(b.liouville->value, sys.n, b.periods->a.det());

      stage = "lattice";
      b.lattice = build_lattice_spec(E0, *b.periods, *b.invariants, detail::to_vec(cfg.windows.c));
      if (b.lattice->window_c.size() == 0) b.lattice->window_c = default_window_c(*b.lattice);
      for (double h : cfg.h_grid) {
        HResult r;
        r.h = h;
        r.window = lattice_window(*b.lattice, h);
        r.lattice = enumerate_lattice(*b.lattice, h);
        b.per_h.push_back(std::move(r));
      }
      if (ro.mode == RunMode::invariants) return b;
    } else {
      if (cfg.windows.c.empty()) throw ConfigError("the spectrum verb needs windows.c");
      const Vec c = detail::to_vec(cfg.windows.c);
      for (double h : cfg.h_grid) {
        HResult r;
        r.h = h;
        r.window = {E0, c * h};
        b.per_h.push_back(std::move(r));
      }
    }

    stage = "spectrum";
    log("joint spectra over " + std::to_string(cfg.h_grid.size()) + " values of h");
    detail::parallel_for(b.per_h.size(), ro.jobs, [&](std::size_t i) {
      HResult& r = b.per_h[i];
      TruncationOptions base;
      base.n_max = cfg.truncation.n_max;
      base.points_per_wavelength = cfg.truncation.points_per_wavelength;
      base.potential_factor = cfg.truncation.potential_factor;
      const auto tr = truncation_for_window(cfg.backend, r.h, r.window.center, r.window.half, base);
      const OperatorSet ops = discretize(sys, r.h, cfg.backend, tr);
      for (const auto& blk : ops.blocks) r.operator_dimension += blk.Q.front().rows();
      for (const auto& sec : ops.sectors) r.operator_dimension += sec.grids.front().diag.size();
      JointSpectrumOptions jo;
      jo.tol_degen_rel = cfg.tol.tol_degen;
      r.spectrum = joint_spectrum(ops, r.window, jo);
      if (!b.lattice) return;
      r.match = match_spectrum(*b.lattice, r.h, *r.spectrum,
                               reject_radius(*b.lattice, r.h, cfg.windows.reject_C));
      try {
        r.multiplicity = multiplicity_profile(*b.lattice, r.h, *r.spectrum, cfg.windows.C, b.l0, sys.n);
      } catch (const WindowOverlapError& e) {
        r.multiplicity_error = e.what();
      }
    });

    if (b.lattice) {
      stage = "scaling";
      std::vector<MatchReport> reps;
      std::vector<MultiplicityReport> mult;
      for (const auto& r : b.per_h) {
        reps.push_back(*r.match);
        if (r.multiplicity) mult.push_back(*r.multiplicity);
      }
      if (reps.size() >= 3) b.scaling = fit_deviation_scaling(reps);
      if (!mult.empty()) b.kappa = multiplicity_constant(mult, sys.k, sys.n);
    }
    log("done");
  } catch (const HypothesisViolation& e) {
    b.violation = Diagnostic{e.hypothesis(), e.detail(), stage};
    log("abort: " + std::string(e.what()));
  } catch (const ConfigError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.what());
  }
  return b;
}

}  // namespace bsq
