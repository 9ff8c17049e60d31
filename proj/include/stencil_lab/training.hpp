#pragma once

// Spectral training data: random band-limited Maxwell states and their exact
// time derivatives dE/dt = dH/dx, dH/dt = dE/dx.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "stencil_lab/core.hpp"
#include "stencil_lab/fourier.hpp"
#include "stencil_lab/random.hpp"

namespace stencil_lab {

struct TrainingConfig {
  int n_sims = 200;
  int m_max = 5;
  Grid1D grid{64, 1.0};
  std::uint64_t seed = 20240607;
  double amplitude_std = 1.0;
  double noise_std = 0.0;

  void validate() const {
    detail::require(n_sims >= 1, "TrainingConfig: n_sims must be >= 1");
    detail::require(m_max >= 1 && 2 * m_max < grid.size(),
                    "TrainingConfig: need 1 <= m_max < N/2 (m_max = " + std::to_string(m_max) +
                        ", N = " + std::to_string(grid.size()) + ")");
    detail::require(std::isfinite(amplitude_std) && amplitude_std >= 0.0,
                    "TrainingConfig: amplitude_std must be >= 0");
    detail::require(std::isfinite(noise_std) && noise_std >= 0.0, "TrainingConfig: noise_std must be >= 0");
  }
};

/// states[s] = (E, H) of sample s; derivatives[s] = (dE/dt, dH/dt).
struct TrainingSet {
  Grid1D grid{64, 1.0};
  int m_max = 0;
  std::uint64_t seed = 0;
  double noise_std = 0.0;
  std::vector<FieldPair> states;
  std::vector<FieldPair> derivatives;

  int n_sims() const { return static_cast<int>(states.size()); }

  void check() const {
    detail::require(!states.empty(), "TrainingSet: no samples");
    detail::require(states.size() == derivatives.size(), "TrainingSet: states/derivatives count mismatch");
    for (std::size_t s = 0; s < states.size(); ++s) {
      states[s].check(grid);
      derivatives[s].check(grid);
    }
  }
};

/// Inverse transform of (i k) u_hat with k = 2 pi m / L over the symmetric
/// mode range; the Nyquist mode (even N) is dropped.
inline Vector spectral_derivative(const Vector& u, const Grid1D& grid, UnitaryDft& dft) {
  const int n = grid.size();
  detail::require(u.size() == n, "spectral_derivative: vector length must equal N");
  ComplexVector u_hat = dft.forward(u);
  const double k0 = 2.0 * std::numbers::pi / grid.length();
  for (int j = 0; j < n; ++j) {
    const int m = signed_mode(j, n);
    if (n % 2 == 0 && 2 * j == n) {
      u_hat[j] = 0.0;
    } else {
      u_hat[j] *= Complex(0.0, k0 * m);
    }
  }
  return dft.inverse(u_hat).real();
}

inline Vector spectral_derivative(const Vector& u, const Grid1D& grid) {
  UnitaryDft dft;
  return spectral_derivative(u, grid, dft);
}

/// sum_{m=1}^{M} a_m sin(2 pi m x / L + phi_m) sampled on the grid.
inline Vector mode_sum(const Grid1D& grid, const Vector& amplitudes, const Vector& phases) {
  detail::require(amplitudes.size() == phases.size(), "mode_sum: amplitude/phase count mismatch");
  Vector u = Vector::Zero(grid.size());
  const double k0 = 2.0 * std::numbers::pi / grid.length();
  for (int i = 0; i < grid.size(); ++i) {
    const double x = grid.point(i);
    double acc = 0.0;
    for (Eigen::Index m = 0; m < amplitudes.size(); ++m)
      acc += amplitudes[m] * std::sin(k0 * static_cast<double>(m + 1) * x + phases[m]);
    u[i] = acc;
  }
  return u;
}

/// Clean targets from the PDE: dE/dt = D_spec H, dH/dt = D_spec E.
inline std::vector<FieldPair> spectral_targets(const std::vector<FieldPair>& states, const Grid1D& grid) {
  UnitaryDft dft;
  std::vector<FieldPair> out;
  out.reserve(states.size());
  for (const auto& s : states) {
    s.check(grid);
    out.push_back({spectral_derivative(s.H, grid, dft), spectral_derivative(s.E, grid, dft)});
  }
  return out;
}

/// Targets produced by a given convolution operator instead of the exact
/// derivative: dE/dt = D H, dH/dt = D E.
inline std::vector<FieldPair> operator_targets(const std::vector<FieldPair>& states, const Stencil& w,
                                               const Grid1D& grid) {
  std::vector<FieldPair> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back({apply_stencil(w, s.H, grid), apply_stencil(w, s.E, grid)});
  return out;
}

/// Random band-limited states only (no targets). Sample s draws, in order,
/// E amplitudes, E phases, H amplitudes, H phases from its own stream.
inline std::vector<FieldPair> random_states(const TrainingConfig& cfg) {
  cfg.validate();
  std::vector<FieldPair> states;
  states.reserve(static_cast<std::size_t>(cfg.n_sims));
  for (int s = 0; s < cfg.n_sims; ++s) {
    auto rng = RandomStream::for_index(cfg.seed, static_cast<std::uint64_t>(s));
    auto draw = [&] {
      Vector a(cfg.m_max), phi(cfg.m_max);
      for (int m = 0; m < cfg.m_max; ++m) a[m] = rng.normal(0.0, cfg.amplitude_std);
      for (int m = 0; m < cfg.m_max; ++m) phi[m] = rng.uniform(0.0, 2.0 * std::numbers::pi);
      return mode_sum(cfg.grid, a, phi);
    };
    Vector e = draw();
    Vector h = draw();
    states.push_back({std::move(e), std::move(h)});
  }
  return states;
}

/// Adds iid N(0, sigma^2) noise to the derivative arrays only. Noise streams
/// are keyed by (seed, n_sims + s) so they never overlap the state streams.
inline void add_derivative_noise(std::vector<FieldPair>& derivatives, double sigma, std::uint64_t seed) {
  if (sigma == 0.0) return;
  const auto offset = static_cast<std::uint64_t>(derivatives.size());
  for (std::size_t s = 0; s < derivatives.size(); ++s) {
    auto rng = RandomStream::for_index(seed, offset + s);
    for (auto* v : {&derivatives[s].E, &derivatives[s].H})
      for (Eigen::Index i = 0; i < v->size(); ++i) (*v)[i] += rng.normal(0.0, sigma);
  }
}

inline TrainingSet generate_training_set(const TrainingConfig& cfg) {
  TrainingSet ts;
  ts.grid = cfg.grid;
  ts.m_max = cfg.m_max;
  ts.seed = cfg.seed;
  ts.noise_std = cfg.noise_std;
  ts.states = random_states(cfg);
  ts.derivatives = spectral_targets(ts.states, cfg.grid);
  add_derivative_noise(ts.derivatives, cfg.noise_std, cfg.seed);
  return ts;
}

}  // namespace stencil_lab
