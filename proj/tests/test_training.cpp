#include <cmath>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "stencil_lab/fourier.hpp"
#include "stencil_lab/random.hpp"
#include "stencil_lab/training.hpp"

using namespace stencil_lab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vector sampled(const Grid1D& g, double (*f)(double), double k, double phase) {
  Vector v(g.size());
  for (int i = 0; i < g.size(); ++i) v[i] = f(kTwoPi * k * g.point(i) + phase);
  return v;
}

double sin_fn(double x) { return std::sin(x); }
double cos_fn(double x) { return std::cos(x); }

}  // namespace

TEST(RandomStream, DeterministicPerIndex) {
  auto a = RandomStream::for_index(42, 3), b = RandomStream::for_index(42, 3), c = RandomStream::for_index(42, 4);
  for (int i = 0; i < 10; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_NE(x, c.uniform());
  }
}

TEST(RandomStream, UniformRangeAndNormalMoments) {
  auto rng = RandomStream::for_index(1, 0);
  double sum = 0.0, sum2 = 0.0;
  constexpr int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sum2 / n, 1.0, 0.02);
}

TEST(UnitaryDft, ParsevalAndRoundTrip) {
  auto rng = RandomStream::for_index(5, 0);
  Vector u(37);
  for (auto& x : u) x = rng.normal();
  UnitaryDft dft;
  const ComplexVector u_hat = dft.forward(u);
  EXPECT_NEAR(u_hat.squaredNorm(), u.squaredNorm(), 1e-12);
  EXPECT_LE((dft.inverse(u_hat).real() - u).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(SignedMode, Wraps) {
  EXPECT_EQ(signed_mode(0, 8), 0);
  EXPECT_EQ(signed_mode(3, 8), 3);
  EXPECT_EQ(signed_mode(4, 8), -4);
  EXPECT_EQ(signed_mode(7, 8), -1);
  EXPECT_EQ(signed_mode(4, 9), 4);
  EXPECT_EQ(signed_mode(5, 9), -4);
}

TEST(SpectralDerivative, Constant) {
  const Grid1D g(64, 1.0);
  EXPECT_LE(spectral_derivative(Vector::Constant(64, 2.5), g).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(SpectralDerivative, FirstMode) {
  const Grid1D g(64, 1.0);
  const Vector d = spectral_derivative(sampled(g, sin_fn, 1, 0.0), g);
  EXPECT_LE((d - kTwoPi * sampled(g, cos_fn, 1, 0.0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SpectralDerivative, HighestTrainingMode) {
  const Grid1D g(64, 1.0);
  const Vector d = spectral_derivative(sampled(g, sin_fn, 5, 0.3), g);
  EXPECT_LE((d - 5.0 * kTwoPi * sampled(g, cos_fn, 5, 0.3)).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(SpectralDerivative, OddLengthNonUnitDomain) {
  const Grid1D g(45, 3.0);
  const double k = kTwoPi * 7.0 / 3.0;
  Vector u(45), expected(45);
  for (int i = 0; i < 45; ++i) u[i] = std::cos(k * g.point(i)), expected[i] = -k * std::sin(k * g.point(i));
  EXPECT_LE((spectral_derivative(u, g) - expected).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(GenerateTrainingSet, ShapesAndSpectralTargets) {
  const TrainingConfig cfg;
  const TrainingSet ts = generate_training_set(cfg);
  ASSERT_EQ(ts.n_sims(), 200);
  ASSERT_EQ(ts.derivatives.size(), 200u);
  for (int s = 0; s < ts.n_sims(); ++s) {
    ASSERT_EQ(ts.states[s].E.size(), 64);
    EXPECT_LE((ts.derivatives[s].E - spectral_derivative(ts.states[s].H, ts.grid)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((ts.derivatives[s].H - spectral_derivative(ts.states[s].E, ts.grid)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(GenerateTrainingSet, SingleModeClosedForm) {
  const Grid1D g(64, 1.0);
  const Vector e = mode_sum(g, Vector::Ones(1), Vector::Zero(1));
  EXPECT_LE((e - sampled(g, sin_fn, 1, 0.0)).cwiseAbs().maxCoeff(), 1e-15);
  const auto targets = spectral_targets({FieldPair{e, e}}, g);
  EXPECT_LE((targets[0].H - kTwoPi * sampled(g, cos_fn, 1, 0.0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GenerateTrainingSet, StatesAreBandLimited) {
  TrainingConfig cfg;
  cfg.n_sims = 5;
  cfg.m_max = 3;
  const TrainingSet ts = generate_training_set(cfg);
  UnitaryDft dft;
  for (const auto& s : ts.states) {
    const ComplexVector e_hat = dft.forward(s.E);
    for (int j = 0; j < 64; ++j) {
      const int m = std::abs(signed_mode(j, 64));
      if (m == 0 || m > 3) {
        EXPECT_LE(std::abs(e_hat[j]), 1e-12) << "mode " << m;
      }
    }
  }
}

TEST(GenerateTrainingSet, SameSeedIsBitwiseIdentical) {
  TrainingConfig cfg;
  cfg.noise_std = 0.3;
  const TrainingSet a = generate_training_set(cfg), b = generate_training_set(cfg);
  for (int s = 0; s < a.n_sims(); ++s) {
    EXPECT_EQ(a.states[s].E, b.states[s].E);
    EXPECT_EQ(a.states[s].H, b.states[s].H);
    EXPECT_EQ(a.derivatives[s].E, b.derivatives[s].E);
    EXPECT_EQ(a.derivatives[s].H, b.derivatives[s].H);
  }
  cfg.seed += 1;
  EXPECT_NE(generate_training_set(cfg).states[0].E, a.states[0].E);
}

TEST(GenerateTrainingSet, DrawOrderPerSample) {
  // Sample 0: E amplitudes, then E phases, from stream (seed, 0).
  const TrainingSet ts = generate_training_set(TrainingConfig{});
  auto rng = RandomStream::for_index(20240607, 0);
  Vector a(5), phi(5);
  for (int m = 0; m < 5; ++m) a[m] = rng.normal();
  for (int m = 0; m < 5; ++m) phi[m] = rng.uniform(0.0, kTwoPi);
  EXPECT_EQ(ts.states[0].E, mode_sum(ts.grid, a, phi));
}

TEST(GenerateTrainingSet, NoiseOnlyTouchesDerivatives) {
  TrainingConfig clean_cfg;
  clean_cfg.n_sims = 20;
  TrainingConfig noisy_cfg = clean_cfg;
  noisy_cfg.noise_std = 0.5;
  const TrainingSet clean = generate_training_set(clean_cfg), noisy = generate_training_set(noisy_cfg);
  double sum2 = 0.0;
  int count = 0;
  for (int s = 0; s < 20; ++s) {
    EXPECT_EQ(clean.states[s].E, noisy.states[s].E);
    const Vector diff = noisy.derivatives[s].E - clean.derivatives[s].E;
    sum2 += diff.squaredNorm();
    count += static_cast<int>(diff.size());
  }
  EXPECT_NEAR(std::sqrt(sum2 / count), 0.5, 0.05);
}

TEST(OperatorTargets, AppliesStencilCrosswise) {
  const Grid1D g(16, 1.0);
  TrainingConfig cfg;
  cfg.grid = g;
  cfg.n_sims = 3;
  const auto states = random_states(cfg);
  const Stencil w = central_difference_stencil(g, 2);
  const auto t = operator_targets(states, w, g);
  EXPECT_EQ(t[1].E, apply_stencil(w, states[1].H, g));
  EXPECT_EQ(t[1].H, apply_stencil(w, states[1].E, g));
}

TEST(TrainingConfig, Validation) {
  TrainingConfig cfg;
  cfg.n_sims = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainingConfig{};
  cfg.m_max = 32;  // Nyquist for N = 64
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainingConfig{};
  cfg.noise_std = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
