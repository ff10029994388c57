#pragma once

#include <cmath>
#include <string>

#include "bsq/quantum/joint_spectrum.hpp"

namespace bsq {

/// Closed-form joint spectra of the oscillator family:
///   ho1d         h (i + 1/2) (+ h c for a constant subprincipal c)
///   ho2d_HL      (h (n + 1), h m), |m| <= n, m = n mod 2
///   ho2d_k1      h (n + 1) with multiplicity n + 1
///   radial2d_HL  lambda = 0 only: (2 h (2 n_r + |m| + 1), h m)
inline JointSpectrum oracle_spectrum(const std::string& model, const ModelParams& params,
                                     double h, const Window& window) {
  if (!(h > 0)) throw InputError("h must be positive");
  JointSpectrum js;
  js.h = h;
  js.window = window;
  auto emit = [&](Vec lam, int mult) {
    if (window.contains(lam)) js.points.push_back({std::move(lam), mult, 0.0});
  };
  const double e_top = window.center(0) + window.half(0);
  if (model == "ho1d") {
    models::detail::reject_unknown(params, {"q1_const", "q1_x"}, model);
    if (param_or(params, "q1_x", 0.0) != 0.0) throw UnsupportedError("no closed form for q1_x");
    const double c = param_or(params, "q1_const", 0.0);
    for (int i = 0; h * (i + 0.5 + c) < e_top; ++i) {
      emit(Vec::Constant(1, h * (i + 0.5 + c)), 1);
    }
  } else if (model == "ho2d_k1") {
    models::detail::reject_unknown(params, {}, model);
    for (int n = 0; h * (n + 1) < e_top; ++n) emit(Vec::Constant(1, h * (n + 1)), n + 1);
  } else if (model == "ho2d_HL") {
    models::detail::reject_unknown(params, {}, model);
    for (int n = 0; h * (n + 1) < e_top; ++n) {
      for (int m = -n; m <= n; m += 2) emit((Vec(2) << h * (n + 1), h * m).finished(), 1);
    }
  } else if (model == "radial2d_HL" && param_or(params, "lambda", 0.1) == 0.0) {
    models::detail::reject_unknown(params, {"lambda"}, model);
    for (int N = 0; 2 * h * (N + 1) < e_top; ++N) {
      for (int m = -N; m <= N; m += 2) {
        emit((Vec(2) << 2 * h * (N + 1), h * m).finished(), 1);
      }
    }
  } else {
    throw UnsupportedError("no closed-form spectrum for model '" + model + "'");
  }
  std::sort(js.points.begin(), js.points.end(), [](const SpectralPoint& a, const SpectralPoint& b) {
    return detail::lex_less_tol(a.lambda, b.lambda, 0.0);
  });
  return js;
}

}  // namespace bsq
