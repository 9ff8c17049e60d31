#pragma once

// Crank-Nicolson integration of the semi-discrete system
//
//   dE/dt = D H,   dH/dt = D E,
//
// written as dU/dt = A U with U = [E; H] and A = [[0, D], [D, 0]]. For a skew
// stencil A^T = -A, so the implicit midpoint update is an orthogonal map and
// the discrete energy is preserved for every dt.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stencil_lab/core.hpp"
#include "stencil_lab/fourier.hpp"

namespace stencil_lab {

enum class CnBackend {
  /// LU of the 2N x 2N matrix I - (dt/2) A.
  Dense,
  /// Diagonalized by the DFT: a 2x2 Moebius map per Fourier mode.
  Spectral,
};

struct SimConfig {
  double dt = 0.5 / 64.0;
  int n_steps = 300;
  Grid1D grid{64, 1.0};
  std::optional<Stencil> stencil;
  CnBackend backend = CnBackend::Dense;

  void validate() const {
    detail::require(std::isfinite(dt) && dt > 0.0, "SimConfig: dt must be > 0");
    detail::require(n_steps >= 0, "SimConfig: n_steps must be >= 0");
    detail::require(stencil.has_value(), "SimConfig: no stencil");
  }

  double final_time() const { return dt * n_steps; }
};

struct Snapshot {
  int step = 0;
  double time = 0.0;
  FieldPair fields;
};

struct SimResult {
  FieldPair final;
  /// Energy after each step; entry 0 is the initial energy.
  std::vector<double> energy;
  std::vector<Snapshot> snapshots;

  double max_relative_drift() const {
    double worst = 0.0;
    for (double e : energy) worst = std::max(worst, std::abs(e - energy.front()) / energy.front());
    return worst;
  }

  /// max_n E^n / E^0; non-finite energies count as unbounded growth.
  double peak_energy_ratio() const {
    double peak = 0.0;
    for (double e : energy) {
      if (!std::isfinite(e)) return std::numeric_limits<double>::infinity();
      peak = std::max(peak, e / energy.front());
    }
    return peak;
  }
};

/// [[0, D], [D, 0]].
inline Matrix maxwell_block_matrix(const Stencil& w, int n) {
  const Matrix d = operator_matrix(w, n);
  Matrix a = Matrix::Zero(2 * n, 2 * n);
  a.topRightCorner(n, n) = d;
  a.bottomLeftCorner(n, n) = d;
  return a;
}

/// Prepared Crank-Nicolson step for one (stencil, grid, dt). A negative dt
/// integrates backwards.
class CrankNicolsonStepper {
 public:
  CrankNicolsonStepper(const Stencil& w, const Grid1D& grid, double dt, CnBackend backend = CnBackend::Dense)
      : grid_(grid), dt_(dt), backend_(backend) {
    detail::require(std::isfinite(dt) && dt != 0.0, "CrankNicolsonStepper: dt must be nonzero");
    detail::require_fits(w, grid.size());
    const int n = grid.size();
    if (backend_ == CnBackend::Dense) {
      const Matrix a = maxwell_block_matrix(w, n);
      const Matrix id = Matrix::Identity(2 * n, 2 * n);
      explicit_part_ = id + 0.5 * dt * a;
      lu_.compute(id - 0.5 * dt * a);
      if (!(lu_.rcond() > 1e-14)) throw NumericalError("Crank-Nicolson matrix I - (dt/2)A is singular");
    } else {
      // Per mode: [E; H]' = mu [[0,1],[1,0]] [E; H]. With a = dt mu / 2 the CN
      // map is (1 - a^2)^{-1} [[1 + a^2, 2a], [2a, 1 + a^2]].
      diag_.resize(n);
      off_.resize(n);
      for (int j = 0; j < n; ++j) {
        const double theta = 2.0 * std::numbers::pi * j / n;
        Complex mu = 0.0;
        for (int l = -w.radius(); l <= w.radius(); ++l) mu += w[l] * std::exp(Complex(0.0, l * theta));
        const Complex a = 0.5 * dt * mu;
        const Complex denom = 1.0 - a * a;
        if (std::abs(denom) < 1e-14) throw NumericalError("Crank-Nicolson matrix I - (dt/2)A is singular");
        diag_[j] = (1.0 + a * a) / denom;
        off_[j] = 2.0 * a / denom;
      }
    }
  }

  FieldPair step(const FieldPair& f) {
    f.check(grid_);
    const int n = grid_.size();
    if (backend_ == CnBackend::Dense) {
      Vector u(2 * n);
      u << f.E, f.H;
      const Vector next = lu_.solve(explicit_part_ * u);
      return {next.head(n), next.tail(n)};
    }
    const ComplexVector e_hat = dft_.forward(f.E);
    const ComplexVector h_hat = dft_.forward(f.H);
    const ComplexVector e_next = diag_.cwiseProduct(e_hat) + off_.cwiseProduct(h_hat);
    const ComplexVector h_next = off_.cwiseProduct(e_hat) + diag_.cwiseProduct(h_hat);
    return {dft_.inverse(e_next).real(), dft_.inverse(h_next).real()};
  }

  double dt() const { return dt_; }
  const Grid1D& grid() const { return grid_; }

 private:
  Grid1D grid_;
  double dt_;
  CnBackend backend_;
  Matrix explicit_part_;
  Eigen::PartialPivLU<Matrix> lu_;
  ComplexVector diag_, off_;
  UnitaryDft dft_;
};

/// U^{n+1} solving (I - dt/2 A) U^{n+1} = (I + dt/2 A) U^n.
inline FieldPair cn_step(const FieldPair& f, CrankNicolsonStepper& stepper) { return stepper.step(f); }

/// Runs n_steps CN steps; snapshot_every = k records steps 0, k, 2k, ... and
/// the final step.
inline SimResult simulate(const FieldPair& init, const SimConfig& cfg, std::optional<int> snapshot_every = {}) {
  cfg.validate();
  init.check(cfg.grid);
  if (snapshot_every) detail::require(*snapshot_every >= 1, "simulate: snapshot_every must be >= 1");
  CrankNicolsonStepper stepper(*cfg.stencil, cfg.grid, cfg.dt, cfg.backend);
  SimResult result;
  result.final = init;
  result.energy.reserve(static_cast<std::size_t>(cfg.n_steps) + 1);
  result.energy.push_back(discrete_energy(init, cfg.grid).value);
  if (snapshot_every) result.snapshots.push_back({0, 0.0, init});
  for (int s = 1; s <= cfg.n_steps; ++s) {
    result.final = stepper.step(result.final);
    result.energy.push_back(discrete_energy(result.final, cfg.grid).value);
    if (snapshot_every && (s % *snapshot_every == 0 || s == cfg.n_steps))
      result.snapshots.push_back({s, s * cfg.dt, result.final});
  }
  return result;
}

/// E(x,0) = sin(2 pi x / L), H(x,0) = cos(2 pi x / L).
inline FieldPair sine_cosine_initial(const Grid1D& grid) {
  FieldPair f{Vector(grid.size()), Vector(grid.size())};
  const double k = 2.0 * std::numbers::pi / grid.length();
  for (int i = 0; i < grid.size(); ++i) {
    f.E[i] = std::sin(k * grid.point(i));
    f.H[i] = std::cos(k * grid.point(i));
  }
  return f;
}

/// Exact solution of dE/dt = dH/dx, dH/dt = dE/dx (unit speed) from the
/// sine/cosine initial data:
///   E = (cos kt - sin kt) sin kx,  H = (cos kt + sin kt) cos kx,  k = 2 pi / L.
/// It equals sin(k(x - t)), cos(k(x - t)) whenever t is a multiple of L.
inline FieldPair traveling_wave_exact(const Grid1D& grid, double t) {
  FieldPair f{Vector(grid.size()), Vector(grid.size())};
  const double k = 2.0 * std::numbers::pi / grid.length();
  const double c = std::cos(k * t);
  const double s = std::sin(k * t);
  for (int i = 0; i < grid.size(); ++i) {
    const double x = grid.point(i);
    f.E[i] = (c - s) * std::sin(k * x);
    f.H[i] = (c + s) * std::cos(k * x);
  }
  return f;
}

/// ||num - ref|| / ||ref|| in the dx-weighted norm.
inline double relative_l2_error(const Vector& num, const Vector& ref, const Grid1D& grid) {
  const double denom = grid_norm(ref, grid);
  detail::require(num.size() == ref.size(), "relative_l2_error: length mismatch");
  detail::require(denom > 0.0, "relative_l2_error: reference has zero norm");
  return grid_norm(num - ref, grid) / denom;
}

}  // namespace stencil_lab
