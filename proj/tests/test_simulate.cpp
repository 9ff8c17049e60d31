#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include "stencil_lab/analysis.hpp"
#include "stencil_lab/random.hpp"
#include "stencil_lab/simulate.hpp"
#include "stencil_lab/training.hpp"

using namespace stencil_lab;

namespace {

FieldPair random_fields(std::uint64_t seed, int n) {
  auto rng = RandomStream::for_index(seed, 0);
  FieldPair f{Vector(n), Vector(n)};
  for (auto& x : f.E) x = rng.normal();
  for (auto& x : f.H) x = rng.normal();
  return f;
}

Stencil random_skew(std::uint64_t seed, int radius, double dx) {
  auto rng = RandomStream::for_index(seed, 1);
  Vector w = Vector::Zero(2 * radius + 1);
  for (int l = 1; l <= radius; ++l) {
    w[radius + l] = rng.normal() / dx;
    w[radius - l] = -w[radius + l];
  }
  return Stencil(w, dx);
}

}  // namespace

TEST(CnStep, ZeroIsFixed) {
  const Grid1D g(16, 1.0);
  CrankNicolsonStepper stepper(centered_difference_stencil(g), g, 0.01);
  const FieldPair z{Vector::Zero(16), Vector::Zero(16)};
  const FieldPair out = cn_step(z, stepper);
  EXPECT_EQ(out.E, z.E);
  EXPECT_EQ(out.H, z.H);
}

TEST(CnStep, SingleModeRotation) {
  // With E = sin(kx), H = cos(kx) the pair (a, b) in E = a sin, H = b cos
  // evolves by the 2x2 CN map of [[0, -s], [s, 0]], s = sin(k dx)/dx: a
  // rotation by 2 atan(dt s / 2).
  const Grid1D g(64, 1.0);
  const double dt = 0.5 * g.spacing();
  CrankNicolsonStepper stepper(centered_difference_stencil(g), g, dt);
  const FieldPair out = cn_step(sine_cosine_initial(g), stepper);
  const double k = 2.0 * std::numbers::pi;
  const double s = std::sin(k * g.spacing()) / g.spacing();
  const double angle = 2.0 * std::atan(0.5 * dt * s);
  // Project onto sin/cos to read off the rotated amplitudes.
  Vector sn(64), cs(64);
  for (int i = 0; i < 64; ++i) sn[i] = std::sin(k * g.point(i)), cs[i] = std::cos(k * g.point(i));
  const double a = out.E.dot(sn) / sn.squaredNorm();
  const double b = out.H.dot(cs) / cs.squaredNorm();
  EXPECT_NEAR(a * a + b * b, 2.0, 1e-13);
  // d/dt (a, b) = s (-b, a): a' = cos(angle) - sin(angle), b' = sin(angle) + cos(angle).
  EXPECT_NEAR(a, std::cos(angle) - std::sin(angle), 1e-13);
  EXPECT_NEAR(b, std::sin(angle) + std::cos(angle), 1e-13);
}

TEST(CnStep, NonSkewStencilChangesNorm) {
  const Grid1D g(32, 1.0);
  const Stencil one_sided(Vector{{0.0, -1.0 / g.spacing(), 1.0 / g.spacing()}}, g.spacing());
  CrankNicolsonStepper stepper(one_sided, g, 0.5 * g.spacing());
  const FieldPair f = random_fields(1, 32);
  EXPECT_NE(discrete_energy(cn_step(f, stepper), g).value, discrete_energy(f, g).value);
  EXPECT_GT(std::abs(discrete_energy(cn_step(f, stepper), g).value / discrete_energy(f, g).value - 1.0), 1e-3);
}

TEST(CnStep, DenseMatchesSpectral) {
  for (int r = 1; r <= 4; ++r) {
    const Grid1D g(24 + r, 1.0);
    const Stencil w = random_skew(r, r, g.spacing());
    CrankNicolsonStepper dense(w, g, 0.3 * g.spacing(), CnBackend::Dense);
    CrankNicolsonStepper spectral(w, g, 0.3 * g.spacing(), CnBackend::Spectral);
    FieldPair a = random_fields(r, g.size()), b = a;
    for (int s = 0; s < 20; ++s) a = dense.step(a), b = spectral.step(b);
    EXPECT_LE((a.E - b.E).cwiseAbs().maxCoeff(), 1e-12 * a.E.cwiseAbs().maxCoeff()) << "R=" << r;
    EXPECT_LE((a.H - b.H).cwiseAbs().maxCoeff(), 1e-12 * a.H.cwiseAbs().maxCoeff()) << "R=" << r;
  }
}

TEST(CnStep, TimeReversible) {
  const Grid1D g(40, 1.0);
  const Stencil w = central_difference_stencil(g, 3);
  CrankNicolsonStepper fwd(w, g, 0.01), back(w, g, -0.01);
  const FieldPair f0 = random_fields(9, 40);
  FieldPair f = f0;
  for (int s = 0; s < 50; ++s) f = fwd.step(f);
  for (int s = 0; s < 50; ++s) f = back.step(f);
  EXPECT_LE((f.E - f0.E).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_LE((f.H - f0.H).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(BlockMatrix, EigenvaluesArePlusMinusIMu) {
  for (int n : {8, 15, 32}) {
    const Grid1D g(n, 1.0);
    const Stencil w = random_skew(n, 3, g.spacing());
    const Matrix a = maxwell_block_matrix(w, n);
    EXPECT_LE((a.transpose() + a).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::EigenSolver<Matrix> eig(a);
    std::vector<double> computed, expected;
    for (int j = 0; j < 2 * n; ++j) {
      EXPECT_LE(std::abs(eig.eigenvalues()[j].real()), 1e-10);
      computed.push_back(eig.eigenvalues()[j].imag());
    }
    for (int m = 0; m < n; ++m) {
      const double mag = std::abs(symbol_at(w, 2.0 * std::numbers::pi * m / n));
      expected.push_back(mag);
      expected.push_back(-mag);
    }
    std::sort(computed.begin(), computed.end());
    std::sort(expected.begin(), expected.end());
    for (int j = 0; j < 2 * n; ++j) EXPECT_NEAR(computed[j], expected[j], 1e-10) << "N=" << n;
  }
}

TEST(Simulate, EnergyConservedWithCenteredDifference) {
  const Grid1D g(64, 1.0);
  SimConfig cfg{0.5 * g.spacing(), 300, g, centered_difference_stencil(g), CnBackend::Dense};
  const SimResult r = simulate(sine_cosine_initial(g), cfg);
  ASSERT_EQ(r.energy.size(), 301u);
  for (double e : r.energy) EXPECT_LE(std::abs(e - r.energy[0]), 1e-11);
}

TEST(Simulate, EnergyConservedForRandomSkewStencilsAndLargeSteps) {
  const Grid1D g(32, 1.0);
  for (int r = 1; r <= 4; ++r) {
    const Stencil w = random_skew(40 + r, r, g.spacing());
    for (double ratio : {0.5, 5.0, 50.0}) {
      SimConfig cfg{ratio * g.spacing(), 100, g, w, CnBackend::Dense};
      EXPECT_LE(simulate(random_fields(r, 32), cfg).max_relative_drift(), 1e-11) << "R=" << r << " ratio " << ratio;
    }
  }
}

TEST(Simulate, ZeroStepsReturnsInitialState) {
  const Grid1D g(16, 1.0);
  SimConfig cfg{0.01, 0, g, centered_difference_stencil(g), CnBackend::Dense};
  const FieldPair init = sine_cosine_initial(g);
  const SimResult r = simulate(init, cfg, 3);
  EXPECT_EQ(r.energy.size(), 1u);
  EXPECT_EQ(r.final.E, init.E);
  EXPECT_EQ(r.snapshots.size(), 1u);
}

TEST(Simulate, SnapshotsIncludeFinalStep) {
  const Grid1D g(16, 1.0);
  SimConfig cfg{0.01, 7, g, centered_difference_stencil(g), CnBackend::Spectral};
  const SimResult r = simulate(sine_cosine_initial(g), cfg, 3);
  ASSERT_EQ(r.snapshots.size(), 4u);
  EXPECT_EQ(r.snapshots[1].step, 3);
  EXPECT_EQ(r.snapshots.back().step, 7);
  EXPECT_DOUBLE_EQ(r.snapshots.back().time, 0.07);
  EXPECT_EQ(r.snapshots.back().fields.E, r.final.E);
}

TEST(Simulate, ConfigValidation) {
  const Grid1D g(16, 1.0);
  SimConfig cfg{0.01, 5, g, std::nullopt, CnBackend::Dense};
  EXPECT_THROW(simulate(sine_cosine_initial(g), cfg), ConfigError);
  cfg.stencil = centered_difference_stencil(g);
  cfg.dt = -1.0;
  EXPECT_THROW(simulate(sine_cosine_initial(g), cfg), ConfigError);
  cfg.dt = 0.01;
  EXPECT_THROW(simulate(sine_cosine_initial(Grid1D(8, 1.0)), cfg), ConfigError);
}

TEST(Simulate, SingularCnSystemIsNumericalError) {
  // Symmetric stencil, symbol 2 at theta = 0: I - (dt/2) A is singular at dt = 1.
  const Grid1D g(8, 1.0);
  const Stencil w(Vector{{1.0, 0.0, 1.0}}, g.spacing());
  EXPECT_THROW(CrankNicolsonStepper(w, g, 1.0, CnBackend::Dense), NumericalError);
  EXPECT_THROW(CrankNicolsonStepper(w, g, 1.0, CnBackend::Spectral), NumericalError);
}

TEST(TravelingWave, InitialAndPeriodic) {
  const Grid1D g(32, 1.0);
  const FieldPair f0 = traveling_wave_exact(g, 0.0);
  const FieldPair init = sine_cosine_initial(g);
  EXPECT_LE((f0.E - init.E).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((f0.H - init.H).cwiseAbs().maxCoeff(), 1e-15);
  const FieldPair f1 = traveling_wave_exact(g, 1.0);
  EXPECT_LE((f1.E - init.E).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((f1.H - init.H).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(TravelingWave, SatisfiesTheSystem) {
  const Grid1D g(32, 1.0);
  auto rng = RandomStream::for_index(17, 0);
  for (int c = 0; c < 5; ++c) {
    const double t = rng.uniform(0.0, 10.0);
    const double h = 1e-5;
    const FieldPair f = traveling_wave_exact(g, t);
    const FieldPair fp = traveling_wave_exact(g, t + h), fm = traveling_wave_exact(g, t - h);
    const Vector dt_e = (fp.E - fm.E) / (2.0 * h);
    const Vector dt_h = (fp.H - fm.H) / (2.0 * h);
    EXPECT_LE((dt_e - spectral_derivative(f.H, g)).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_LE((dt_h - spectral_derivative(f.E, g)).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(RelativeL2Error, Examples) {
  const Grid1D g(32, 1.0);
  const Vector ref = sine_cosine_initial(g).E;
  EXPECT_EQ(relative_l2_error(ref, ref, g), 0.0);
  EXPECT_NEAR(relative_l2_error(2.0 * ref, ref, g), 1.0, 1e-15);
  const Vector orth = sine_cosine_initial(g).H;
  const double eps = 1e-3;
  EXPECT_NEAR(relative_l2_error(ref + eps * orth / grid_norm(orth, g), ref, g), eps / grid_norm(ref, g), 1e-12);
  EXPECT_THROW(relative_l2_error(ref, Vector::Zero(32), g), ConfigError);
}
