#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsq/errors.hpp"
#include "bsq/phase_space.hpp"

namespace bsq {

using json = nlohmann::json;

struct Tolerances {
  double tol_flow = 1e-10;
  double tol_level = 1e-10;
  double tol_rank = 1e-6;
  double tol_period = 1e-9;
  double tol_verify = 1e-7;
  double tol_action = 1e-6;
  double tol_subprincipal = 1e-6;
  double tol_eig = 1e-8;
  double tol_comm = 1e-10;
  double tol_degen = 1e-9;
};

struct ExperimentConfig {
  std::string model;
  std::map<std::string, double> params;
  std::vector<double> E0;
  std::vector<double> guess;          // optional start point for Sigma_0
  std::vector<double> h_grid;
  std::string backend = "oscillator-exact";
  Tolerances tol;
  struct {
    double t_max = 8.0;
    int grid = 0;
    int n_verify = 3;
    std::uint64_t seed = 7;
  } periods;
  struct {
    int n_frames = 256;
    int n_base_points = 5;
  } invariants;
  struct {
    std::size_t n_samples = 32;
    double probe_radius = 1e6;
  } validation;
  struct {
    std::size_t n_samples = 1000000;
    std::uint64_t seed = 42;
    double epsilon = 0.0;
  } mc;
  struct {
    std::vector<double> c;           // empty: 0.45 x lattice gap / h
    double C = 2.0;                  // multiplicity cube half-width C h^2
    double reject_C = 10.0;          // match rejection radius C h^2
  } windows;
  struct {
    int n_max = 0;
    double points_per_wavelength = 80.0;
    double potential_factor = 4.0;
  } truncation;
  struct {
    std::string directory = "out";
    std::vector<std::string> formats{"json", "csv"};
  } outputs;
};

namespace detail {

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void check_keys(const json& j, std::initializer_list<const char*> known,
                       const std::string& where) {
  if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& c) {
  if (c.model.empty()) throw ConfigError("model.name is required");
  if (c.E0.empty()) throw ConfigError("E0 is required");
  if (c.h_grid.empty()) throw ConfigError("h_grid must be nonempty");
  for (std::size_t i = 0; i < c.h_grid.size(); ++i) {
    if (!(c.h_grid[i] > 0)) throw ConfigError("h_grid entries must be positive");
    if (i > 0 && !(c.h_grid[i] < c.h_grid[i - 1])) {
      throw ConfigError("h_grid must be strictly decreasing");
    }
  }
  if (!c.windows.c.empty() && c.windows.c.size() != c.E0.size()) {
    throw ConfigError("windows.c must have one entry per component of E0");
  }
  if (!(c.windows.C > 0) || !(c.windows.reject_C > 0)) {
    throw ConfigError("windows.C and windows.reject_C must be positive");
  }
  for (const auto& f : c.outputs.formats) {
    if (f != "json" && f != "csv") throw ConfigError("unknown output format '" + f + "'");
  }
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    detail::check_keys(j, {"model", "E0", "guess", "h_grid", "backend", "tolerances", "periods",
                           "invariants", "validation", "mc", "windows", "truncation", "outputs"},
                       "config");
    const auto& m = j.at("model");
    detail::check_keys(m, {"name", "params"}, "model");
    c.model = m.at("name").get<std::string>();
    detail::take(m, "params", c.params);
    c.E0 = j.at("E0").get<std::vector<double>>();
    detail::take(j, "guess", c.guess);
    c.h_grid = j.at("h_grid").get<std::vector<double>>();
    detail::take(j, "backend", c.backend);
    if (j.contains("tolerances")) {
      const auto& t = j["tolerances"];
      detail::check_keys(t, {"tol_flow", "tol_level", "tol_rank", "tol_period", "tol_verify",
                             "tol_action", "tol_subprincipal", "tol_eig", "tol_comm", "tol_degen"},
                         "tolerances");
      detail::take(t, "tol_flow", c.tol.tol_flow);
      detail::take(t, "tol_level", c.tol.tol_level);
      detail::take(t, "tol_rank", c.tol.tol_rank);
      detail::take(t, "tol_period", c.tol.tol_period);
      detail::take(t, "tol_verify", c.tol.tol_verify);
      detail::take(t, "tol_action", c.tol.tol_action);
      detail::take(t, "tol_subprincipal", c.tol.tol_subprincipal);
      detail::take(t, "tol_eig", c.tol.tol_eig);
      detail::take(t, "tol_comm", c.tol.tol_comm);
      detail::take(t, "tol_degen", c.tol.tol_degen);
    }
    if (j.contains("periods")) {
      const auto& p = j["periods"];
      detail::check_keys(p, {"t_max", "grid", "n_verify", "seed"}, "periods");
      detail::take(p, "t_max", c.periods.t_max);
      detail::take(p, "grid", c.periods.grid);
      detail::take(p, "n_verify", c.periods.n_verify);
      detail::take(p, "seed", c.periods.seed);
    }
    if (j.contains("invariants")) {
      const auto& p = j["invariants"];
      detail::check_keys(p, {"n_frames", "n_base_points"}, "invariants");
      detail::take(p, "n_frames", c.invariants.n_frames);
      detail::take(p, "n_base_points", c.invariants.n_base_points);
    }
    if (j.contains("validation")) {
      const auto& p = j["validation"];
      detail::check_keys(p, {"n_samples", "probe_radius"}, "validation");
      detail::take(p, "n_samples", c.validation.n_samples);
      detail::take(p, "probe_radius", c.validation.probe_radius);
    }
    if (j.contains("mc")) {
      const auto& p = j["mc"];
      detail::check_keys(p, {"n_samples", "seed", "epsilon"}, "mc");
      detail::take(p, "n_samples", c.mc.n_samples);
      detail::take(p, "seed", c.mc.seed);
      detail::take(p, "epsilon", c.mc.epsilon);
    }
    if (j.contains("windows")) {
      const auto& p = j["windows"];
      detail::check_keys(p, {"c", "C", "reject_C"}, "windows");
      detail::take(p, "c", c.windows.c);
      detail::take(p, "C", c.windows.C);
      detail::take(p, "reject_C", c.windows.reject_C);
    }
    if (j.contains("truncation")) {
      const auto& p = j["truncation"];
      detail::check_keys(p, {"n_max", "points_per_wavelength", "potential_factor"}, "truncation");
      detail::take(p, "n_max", c.truncation.n_max);
      detail::take(p, "points_per_wavelength", c.truncation.points_per_wavelength);
      detail::take(p, "potential_factor", c.truncation.potential_factor);
    }
    if (j.contains("outputs")) {
      const auto& p = j["outputs"];
      detail::check_keys(p, {"directory", "formats"}, "outputs");
      detail::take(p, "directory", c.outputs.directory);
      detail::take(p, "formats", c.outputs.formats);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  validate_config(c);
  return c;
}

/// Full config with defaults filled in; parsing it reproduces the run.
inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["model"] = {{"name", c.model}, {"params", c.params}};
  j["E0"] = c.E0;
  if (!c.guess.empty()) j["guess"] = c.guess;
  j["h_grid"] = c.h_grid;
  j["backend"] = c.backend;
  j["tolerances"] = {{"tol_flow", c.tol.tol_flow},         {"tol_level", c.tol.tol_level},
                     {"tol_rank", c.tol.tol_rank},         {"tol_period", c.tol.tol_period},
                     {"tol_verify", c.tol.tol_verify},     {"tol_action", c.tol.tol_action},
                     {"tol_subprincipal", c.tol.tol_subprincipal},
                     {"tol_eig", c.tol.tol_eig},           {"tol_comm", c.tol.tol_comm},
                     {"tol_degen", c.tol.tol_degen}};
  j["periods"] = {{"t_max", c.periods.t_max},
                  {"grid", c.periods.grid},
                  {"n_verify", c.periods.n_verify},
                  {"seed", c.periods.seed}};
  j["invariants"] = {{"n_frames", c.invariants.n_frames},
                     {"n_base_points", c.invariants.n_base_points}};
  j["validation"] = {{"n_samples", c.validation.n_samples},
                     {"probe_radius", c.validation.probe_radius}};
  j["mc"] = {{"n_samples", c.mc.n_samples}, {"seed", c.mc.seed}, {"epsilon", c.mc.epsilon}};
  j["windows"] = {{"c", c.windows.c}, {"C", c.windows.C}, {"reject_C", c.windows.reject_C}};
  j["truncation"] = {{"n_max", c.truncation.n_max},
                     {"points_per_wavelength", c.truncation.points_per_wavelength},
                     {"potential_factor", c.truncation.potential_factor}};
  j["outputs"] = {{"directory", c.outputs.directory}, {"formats", c.outputs.formats}};
  return j;
}

/// Parses JSON with // and /* */ comments.
inline ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// FNV-1a (64 bit) of the canonical config dump, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  const std::string s = config_to_json(c).dump();
  std::uint64_t x = 1469598103934665603ull;
  for (unsigned char ch : s) {
    x ^= ch;
    x *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << x;
  return os.str();
}

}  // namespace bsq
