#pragma once

// Fourier symbol, wave speed / CFL bound, Crank-Nicolson dispersion, modal
// energies and the spatial convergence harness.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "stencil_lab/core.hpp"
#include "stencil_lab/fourier.hpp"
#include "stencil_lab/simulate.hpp"

namespace stencil_lab {

/// mu(theta) = sum_k w_k e^{i k theta}.
inline Complex symbol_at(const Stencil& w, double theta) {
  Complex mu = 0.0;
  for (int k = -w.radius(); k <= w.radius(); ++k) mu += w[k] * std::exp(Complex(0.0, k * theta));
  return mu;
}

struct SymbolCurve {
  std::vector<double> thetas;
  std::vector<Complex> values;
};

inline SymbolCurve symbol(const Stencil& w, const std::vector<double>& thetas) {
  SymbolCurve curve{thetas, {}};
  curve.values.reserve(thetas.size());
  for (double t : thetas) curve.values.push_back(symbol_at(w, t));
  return curve;
}

/// n equispaced angles pi/n, 2pi/n, ..., pi.
inline std::vector<double> positive_thetas(int n) {
  detail::require(n >= 1, "positive_thetas: need at least one sample");
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) t[j] = std::numbers::pi * (j + 1) / n;
  return t;
}

/// n equispaced angles covering [-pi, pi] inclusive.
inline std::vector<double> symmetric_thetas(int n) {
  detail::require(n >= 2, "symmetric_thetas: need at least two samples");
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) t[j] = -std::numbers::pi + 2.0 * std::numbers::pi * j / (n - 1);
  return t;
}

/// c_max = max_theta |mu(theta)|: 4096-point scan of [0, pi] (|mu| is even for
/// real stencils) refined by golden-section search around the best sample.
inline double max_wave_speed(const Stencil& w) {
  constexpr int samples = 4096;
  auto speed = [&](double t) { return std::abs(symbol_at(w, t)); };
  const double h = std::numbers::pi / (samples - 1);
  int best = 0;
  double best_val = -1.0;
  for (int j = 0; j < samples; ++j) {
    const double v = speed(j * h);
    if (v > best_val) best_val = v, best = j;
  }
  double lo = std::max(0.0, (best - 1) * h);
  double hi = std::min(std::numbers::pi, (best + 1) * h);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = speed(x1), f2 = speed(x2);
  while (hi - lo > 1e-10) {
    if (f1 < f2) {
      lo = x1, x1 = x2, f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = speed(x2);
    } else {
      hi = x2, x2 = x1, f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = speed(x1);
    }
  }
  return std::max({best_val, f1, f2, speed(0.5 * (lo + hi))});
}

/// dt <= 2 / c_max.
inline double cfl_bound(const Stencil& w) {
  const double c = max_wave_speed(w);
  if (!(c > 0.0)) throw NumericalError("cfl_bound: stencil has zero symbol (c_max = 0)");
  return 2.0 / c;
}

struct DispersionCurves {
  std::vector<double> thetas;
  std::vector<double> amplification;
  std::vector<double> phase_ratio;
  /// arg of the CN factor for the exact symbol i theta / dx, divided by theta.
  std::vector<double> reference_phase_ratio;
};

/// mu_CN(theta) = (1 + dt/2 lambda(theta)) / (1 - dt/2 lambda(theta)) with
/// lambda the stencil symbol.
inline DispersionCurves cn_dispersion(const Stencil& w, double dt, const std::vector<double>& thetas) {
  detail::require(std::isfinite(dt) && dt > 0.0, "cn_dispersion: dt must be > 0");
  DispersionCurves out;
  out.thetas = thetas;
  for (double t : thetas) {
    detail::require(t != 0.0, "cn_dispersion: theta = 0 has no phase ratio");
    const Complex lam = symbol_at(w, t);
    const Complex mu = (1.0 + 0.5 * dt * lam) / (1.0 - 0.5 * dt * lam);
    const Complex lam_ref(0.0, t / w.spacing());
    const Complex mu_ref = (1.0 + 0.5 * dt * lam_ref) / (1.0 - 0.5 * dt * lam_ref);
    out.amplification.push_back(std::abs(mu));
    out.phase_ratio.push_back(std::arg(mu) / t);
    out.reference_phase_ratio.push_back(std::arg(mu_ref) / t);
  }
  return out;
}

/// (dx/2)(|E_hat_m|^2 + |H_hat_m|^2) per DFT index m, unitary normalization;
/// the entries sum to discrete_energy.
inline Vector modal_energies(const FieldPair& f, const Grid1D& grid) {
  f.check(grid);
  UnitaryDft dft;
  const ComplexVector e = dft.forward(f.E);
  const ComplexVector h = dft.forward(f.H);
  return 0.5 * grid.spacing() * (e.cwiseAbs2() + h.cwiseAbs2());
}

struct ConvergenceRow {
  int cells = 0;
  double dx = 0.0;
  double error = 0.0;
  std::optional<double> order;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  /// False when a stencil could not be produced at some resolution; rows holds
  /// the resolutions completed before the failure.
  bool complete = true;
  std::string failure;
};

using StencilProvider = std::function<Stencil(const Grid1D&)>;

/// For each N: build the stencil, run CN from the sine/cosine data to T with
/// dt = T / round(T / (dt_ratio dx)), and measure the relative L2 error of E
/// against traveling_wave_exact.
inline ConvergenceStudy convergence_study(const StencilProvider& provider, const std::vector<int>& resolutions,
                                          double final_time, double dt_ratio, double length = 1.0,
                                          CnBackend backend = CnBackend::Spectral) {
  detail::require(final_time > 0.0, "convergence_study: T must be > 0");
  detail::require(dt_ratio > 0.0, "convergence_study: dt_ratio must be > 0");
  for (std::size_t i = 1; i < resolutions.size(); ++i)
    detail::require(resolutions[i] > resolutions[i - 1], "convergence_study: resolutions must be ascending");
  ConvergenceStudy study;
  for (int n : resolutions) {
    const Grid1D grid(n, length);
    std::optional<Stencil> w;
    try {
      w = provider(grid);
    } catch (const std::exception& e) {
      study.complete = false;
      study.failure = "N = " + std::to_string(n) + ": " + e.what();
      return study;
    }
    const auto steps = static_cast<int>(std::llround(final_time / (dt_ratio * grid.spacing())));
    SimConfig cfg{final_time / steps, steps, grid, *w, backend};
    const SimResult sim = simulate(sine_cosine_initial(grid), cfg);
    ConvergenceRow row{n, grid.spacing(), relative_l2_error(sim.final.E, traveling_wave_exact(grid, final_time).E, grid), {}};
    if (!study.rows.empty()) row.order = std::log2(study.rows.back().error / row.error);
    study.rows.push_back(row);
  }
  return study;
}

}  // namespace stencil_lab
