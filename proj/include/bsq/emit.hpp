#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "bsq/experiment.hpp"

namespace bsq {

namespace emit_detail {

inline json vec(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json ivec(const IVec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(static_cast<long long>(v(i)));
  return a;
}

inline json mat(const Mat& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i).transpose()));
  return a;
}

inline json window(const Window& w) { return {{"center", vec(w.center)}, {"half", vec(w.half)}}; }

inline json spectrum(const JointSpectrum& js) {
  json pts = json::array();
  for (const auto& p : js.points) {
    pts.push_back({{"lambda", vec(p.lambda)}, {"multiplicity", p.multiplicity}, {"residual", p.residual}});
  }
  json disc = json::array();
  for (const auto& d : js.discarded) {
    disc.push_back({{"lambda", vec(d.lambda)}, {"boundary_mass", d.boundary_mass}, {"where", d.where}});
  }
  return {{"points", pts}, {"discarded", disc}, {"max_extrapolation_change", js.max_extrapolation_change}};
}

inline json predicted(const PredictedPoint& q) { return {{"value", vec(q.value)}, {"index", ivec(q.index)}}; }

inline json match(const MatchReport& m) {
  json pairs = json::array();
  for (const auto& p : m.pairs) {
    pairs.push_back({{"lambda", vec(p.point.lambda)},
                     {"multiplicity", p.point.multiplicity},
                     {"lattice", predicted(p.lattice)},
                     {"deviation", p.deviation}});
  }
  json us = json::array();
  for (const auto& p : m.unmatched_spectrum) us.push_back(vec(p.lambda));
  json ul = json::array();
  for (const auto& q : m.unmatched_lattice) ul.push_back(predicted(q));
  return {{"reject_radius", m.reject_radius}, {"window", window(m.window)}, {"pairs", pairs},
          {"unmatched_spectrum", us},         {"unmatched_lattice", ul},    {"max_deviation", m.max_deviation}};
}

inline json multiplicity(const MultiplicityReport& r) {
  json e = json::array();
  for (const auto& x : r.entries) {
    e.push_back({{"index", ivec(x.index)},
                 {"center", vec(x.center)},
                 {"count", x.count},
                 {"predicted", x.predicted},
                 {"relative_error", x.relative_error}});
  }
  return {{"cube_half_width", r.cube_half_width}, {"l0", r.l0}, {"predicted", r.predicted}, {"entries", e}};
}

}  // namespace emit_detail

/// Full bundle as JSON. Absent stages are null, empty lists stay arrays.
inline json bundle_to_json(const ResultBundle& b) {
  using namespace emit_detail;
  json j;
  j["schema"] = b.schema;
  j["provenance"] = {{"code_version", b.code_version},
                     {"mode", b.mode},
                     {"config_hash", b.config_hash},
                     {"config", config_to_json(b.config)},
                     {"seeds",
                      {{"mc", b.config.mc.seed}, {"periods", b.config.periods.seed}}}};
  j["violation"] = b.violation ? json{{"hypothesis", b.violation->hypothesis},
                                      {"detail", b.violation->detail},
                                      {"stage", b.violation->stage}}
                               : json(nullptr);
  if (b.validation) {
    const auto& v = *b.validation;
    j["validation"] = {{"min_singular_value", v.min_singular_value}, {"max_norm", v.max_norm},
                       {"n_points", v.n_points},                     {"regular", v.regular},
                       {"bounded", v.bounded},                       {"connected_asserted", v.connected_asserted}};
  } else {
    j["validation"] = nullptr;
  }
  if (b.periods) {
    const auto& p = *b.periods;
    j["period_lattice"] = {{"basis", mat(p.basis)},
                           {"a", mat(p.a.a())},
                           {"det_a", p.a.det()},
                           {"return_residuals", vec(p.return_residuals)},
                           {"verify_residuals", vec(p.verify_residuals)}};
  } else {
    j["period_lattice"] = nullptr;
  }
  if (b.invariants) {
    const auto& c = *b.invariants;
    j["cycle_invariants"] = {{"alpha", vec(c.alpha)},
                             {"mu", ivec(c.mu)},
                             {"delta", vec(c.delta)},
                             {"alpha_spread", vec(c.alpha_spread)},
                             {"delta_spread", vec(c.delta_spread)},
                             {"n_base_points", c.n_base_points}};
  } else {
    j["cycle_invariants"] = nullptr;
  }
  if (b.liouville) {
    const auto& l = *b.liouville;
    j["liouville"] = {{"mass", l.value},
                      {"stderr", l.stderr_},
                      {"half_epsilon_mass", l.half_epsilon_value},
                      {"half_epsilon_stderr", l.half_epsilon_stderr},
                      {"epsilon", l.epsilon},
                      {"n_samples", l.n_samples},
                      {"accepted", l.accepted},
                      {"box_growths", l.box_growths},
                      {"l0", b.l0},
                      {"l0_total", b.l0_total}};
  } else {
    j["liouville"] = nullptr;
  }
  if (b.lattice) {
    const auto& s = *b.lattice;
    j["lattice_spec"] = {{"E0", vec(s.E0)},         {"a", mat(s.a.a())},   {"map", mat(lattice_map(s))},
                         {"alpha", vec(s.alpha)},   {"mu", ivec(s.mu)},    {"delta", vec(s.delta)},
                         {"window_c", vec(s.window_c)}};
  } else {
    j["lattice_spec"] = nullptr;
  }
  json per_h = json::array();
  for (const auto& r : b.per_h) {
    json x;
    x["h"] = r.h;
    x["window"] = window(r.window);
    json lat = json::array();
    for (const auto& q : r.lattice) lat.push_back(predicted(q));
    x["lattice"] = lat;
    x["operator_dimension"] = r.operator_dimension;
    x["spectrum"] = r.spectrum ? spectrum(*r.spectrum) : json(nullptr);
    x["match"] = r.match ? match(*r.match) : json(nullptr);
    x["multiplicity"] = r.multiplicity ? multiplicity(*r.multiplicity) : json(nullptr);
    if (!r.multiplicity_error.empty()) x["multiplicity_error"] = r.multiplicity_error;
    per_h.push_back(std::move(x));
  }
  j["per_h"] = per_h;
  if (b.scaling) {
    const auto& f = *b.scaling;
    j["scaling"] = {{"h", f.h_list},
                    {"max_deviation", f.max_deviations},
                    {"outcome", f.exact_match ? "exact-match" : "fitted"},
                    {"n_fitted", f.n_fitted},
                    {"fitted_exponent", f.fitted_exponent},
                    {"intercept", f.intercept},
                    {"fit_residual", f.fit_residual},
                    {"monotone", f.monotone}};
  } else {
    j["scaling"] = nullptr;
  }
  j["kappa"] = b.kappa ? json(*b.kappa) : json(nullptr);
  return j;
}

inline json diagnostic_to_json(const ResultBundle& b) {
  return {{"schema", "bsq.diagnostic/1"},
          {"hypothesis", b.violation->hypothesis},
          {"detail", b.violation->detail},
          {"stage", b.violation->stage},
          {"config_hash", b.config_hash},
          {"config", config_to_json(b.config)}};
}

/// 17 significant digits, as used in every CSV cell.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace emit_detail {

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + p.string() + "'");
}

inline std::string header(const std::string& first, const char* name, int k, const std::string& rest) {
  std::string s = first;
  for (int j = 1; j <= k; ++j) s += std::string(",") + name + std::to_string(j);
  return s + rest + "\n";
}

}  // namespace emit_detail

struct CsvTables {
  std::string spectra, matches, scaling, multiplicity;
};

inline CsvTables bundle_to_csv(const ResultBundle& b) {
  using emit_detail::header;
  const int k = static_cast<int>(b.config.E0.size());
  CsvTables t;
  t.spectra = header("h", "lambda_", k, ",multiplicity,residual");
  t.matches = header("h,deviation", "n_", k, "");
  t.scaling = "h,max_deviation\n";
  t.multiplicity = header("h", "n_", k, ",N,predicted");
  for (const auto& r : b.per_h) {
    const std::string h = fmt17(r.h);
    if (r.spectrum) {
      for (const auto& p : r.spectrum->points) {
        t.spectra += h;
        for (int j = 0; j < k; ++j) t.spectra += "," + fmt17(p.lambda(j));
        t.spectra += "," + std::to_string(p.multiplicity) + "," + fmt17(p.residual) + "\n";
      }
    }
    if (r.match) {
      for (const auto& p : r.match->pairs) {
        t.matches += h + "," + fmt17(p.deviation);
        for (int j = 0; j < k; ++j) t.matches += "," + std::to_string(p.lattice.index(j));
        t.matches += "\n";
      }
      t.scaling += h + "," + fmt17(r.match->max_deviation) + "\n";
    }
    if (r.multiplicity) {
      for (const auto& e : r.multiplicity->entries) {
        t.multiplicity += h;
        for (int j = 0; j < k; ++j) t.multiplicity += "," + std::to_string(e.index(j));
        t.multiplicity += "," + std::to_string(e.count) + "," + fmt17(e.predicted) + "\n";
      }
    }
  }
  return t;
}

/// BSQ_OUT_DIR, when set, replaces the configured output directory.
inline std::filesystem::path output_directory(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("BSQ_OUT_DIR"); env && *env) return env;
  return cfg.outputs.directory;
}

/// Writes result.json and/or the CSV tables; a violated hypothesis writes
/// diagnostic.json instead. Returns the paths written.
inline std::vector<std::filesystem::path> emit(const ResultBundle& b, const std::filesystem::path& dir,
                                               bool json_out, bool csv_out) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto put = [&](const char* name, const std::string& text) {
    emit_detail::write_file(dir / name, text);
    written.push_back(dir / name);
  };
  if (b.violation) {
    put("diagnostic.json", diagnostic_to_json(b).dump(2) + "\n");
    return written;
  }
  if (json_out) put("result.json", bundle_to_json(b).dump(2) + "\n");
  if (csv_out) {
    const auto t = bundle_to_csv(b);
    put("spectra.csv", t.spectra);
    put("matches.csv", t.matches);
    put("scaling.csv", t.scaling);
    put("multiplicity.csv", t.multiplicity);
  }
  return written;
}

}  // namespace bsq
