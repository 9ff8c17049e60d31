#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "stencil_lab/core.hpp"
#include "stencil_lab/random.hpp"
#include "stencil_lab/regression.hpp"

using namespace stencil_lab;

namespace {

Vector random_vector(RandomStream& rng, int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

Vector sine(const Grid1D& g, double k = 1.0, double phase = 0.0) {
  Vector v(g.size());
  for (int i = 0; i < g.size(); ++i) v[i] = std::sin(2.0 * std::numbers::pi * k * g.point(i) + phase);
  return v;
}

}  // namespace

TEST(Grid1D, SpacingAndPoints) {
  const Grid1D g(64, 1.0);
  EXPECT_DOUBLE_EQ(g.spacing(), 1.0 / 64.0);
  EXPECT_DOUBLE_EQ(g.point(10), 10.0 / 64.0);
  EXPECT_EQ(g.points().size(), 64);
}

TEST(Grid1D, RejectsDegenerateInput) {
  EXPECT_THROW(Grid1D(2, 1.0), ConfigError);
  EXPECT_THROW(Grid1D(8, 0.0), ConfigError);
  EXPECT_THROW(Grid1D(8, std::nan("")), ConfigError);
}

TEST(Stencil, IndexingByOffset) {
  const Stencil w(Vector{{1.0, 2.0, 3.0, 4.0, 5.0}}, 0.1);
  EXPECT_EQ(w.radius(), 2);
  EXPECT_EQ(w[-2], 1.0);
  EXPECT_EQ(w[0], 3.0);
  EXPECT_EQ(w[2], 5.0);
}

TEST(Stencil, RejectsEvenOrNonFinite) {
  EXPECT_THROW(Stencil(Vector{{1.0, 2.0}}, 0.1), ConfigError);
  EXPECT_THROW(Stencil(Vector{{1.0, std::nan(""), 1.0}}, 0.1), ConfigError);
  EXPECT_THROW(Stencil(Vector{{1.0, 0.0, 1.0}}, -1.0), ConfigError);
}

TEST(ApplyStencil, ConstantGivesZero) {
  const Grid1D g(64, 1.0);
  const Vector v = apply_stencil(centered_difference_stencil(g), Vector::Constant(64, 3.7), g);
  EXPECT_LE(v.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ApplyStencil, CenteredDifferenceOfSine) {
  const Grid1D g(64, 1.0);
  const Vector v = apply_stencil(centered_difference_stencil(g), sine(g), g);
  for (int i = 0; i < 64; ++i) {
    const double expected = 64.0 * std::sin(2.0 * std::numbers::pi / 64.0) * std::cos(2.0 * std::numbers::pi * g.point(i));
    EXPECT_NEAR(v[i], expected, 1e-12);
  }
}

TEST(ApplyStencil, CenterOnlyScales) {
  const Grid1D g(16, 1.0);
  RandomStream rng = RandomStream::for_index(1, 0);
  const Vector u = random_vector(rng, 16);
  const Vector v = apply_stencil(Stencil(Vector{{0.0, 5.0, 0.0}}, g.spacing()), u, g);
  EXPECT_LE((v - 5.0 * u).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ApplyStencil, RadiusMustFitGrid) {
  const Grid1D g(4, 1.0);
  EXPECT_THROW(apply_stencil(Stencil::zero(2, g.spacing()), Vector::Zero(4), g), ConfigError);
  EXPECT_THROW(apply_stencil(Stencil::zero(1, g.spacing()), Vector::Zero(5), g), ConfigError);
}

TEST(OperatorMatrix, SmallCirculantRows) {
  const Matrix d = operator_matrix(Stencil(Vector{{-1.0, 0.0, 1.0}}, 1.0), 4);
  Matrix expected(4, 4);
  expected << 0, 1, 0, -1,
             -1, 0, 1, 0,
              0, -1, 0, 1,
              1, 0, -1, 0;
  EXPECT_EQ(d, expected);
}

TEST(OperatorMatrix, SkewStencilGivesSkewMatrix) {
  const Grid1D g(12, 1.0);
  const Matrix d = operator_matrix(central_difference_stencil(g, 3), 12);
  EXPECT_LE((d.transpose() + d).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(OperatorMatrix, MatchesApplyOnRandomInputs) {
  RandomStream rng = RandomStream::for_index(7, 0);
  for (int c = 0; c < 20; ++c) {
    const int r = 1 + c % 4;
    const int n = 2 * r + 1 + c;
    const Grid1D g(n, 1.0);
    const Stencil w(random_vector(rng, 2 * r + 1), g.spacing());
    const Vector u = random_vector(rng, n);
    const Vector diff = operator_matrix(w, n) * u - apply_stencil(w, u, g);
    EXPECT_LE(diff.cwiseAbs().maxCoeff(), 1e-13) << "case " << c;
  }
}

TEST(InnerProduct, OnesIntegrateToLength) {
  const Grid1D g(64, 1.0);
  EXPECT_NEAR(inner_product(Vector::Ones(64), Vector::Ones(64), g), 1.0, 1e-15);
}

TEST(InnerProduct, SineCosineOrthogonal) {
  const Grid1D g(64, 1.0);
  EXPECT_NEAR(inner_product(sine(g), sine(g, 1.0, std::numbers::pi / 2), g), 0.0, 1e-15);
}

TEST(InnerProduct, SkewAdjointness) {
  const Grid1D g(32, 2.0);
  RandomStream rng = RandomStream::for_index(3, 0);
  const Stencil w = central_difference_stencil(g, 2);
  for (int c = 0; c < 5; ++c) {
    const Vector u = random_vector(rng, 32), v = random_vector(rng, 32);
    EXPECT_NEAR(inner_product(apply_stencil(w, u, g), v, g), -inner_product(u, apply_stencil(w, v, g), g), 1e-11);
  }
}

TEST(DiscreteEnergy, Examples) {
  const Grid1D g(64, 1.0);
  EXPECT_EQ(discrete_energy({Vector::Zero(64), Vector::Zero(64)}, g).value, 0.0);
  const FieldPair f{sine(g), sine(g, 1.0, std::numbers::pi / 2)};
  EXPECT_NEAR(discrete_energy(f, g).value, 0.5, 1e-14);
  EXPECT_NEAR(discrete_energy({2.0 * f.E, 2.0 * f.H}, g).value, 4.0 * discrete_energy(f, g).value, 1e-14);
}

TEST(CenteredDifference, Coefficients) {
  const Stencil w64 = centered_difference_stencil(Grid1D(64, 1.0));
  EXPECT_EQ(w64.coefficients(), (Vector{{-32.0, 0.0, 32.0}}));
  const Stencil w128 = centered_difference_stencil(Grid1D(128, 1.0));
  EXPECT_EQ(w128.coefficients(), (Vector{{-64.0, 0.0, 64.0}}));
  EXPECT_EQ(build_skew_constraints(1).residual(w64.coefficients()), 0.0);
}

TEST(CentralDifference, FourthOrderCoefficients) {
  const Grid1D g(12, 1.0);
  const Stencil w = central_difference_stencil(g, 2);
  const double s = 1.0 / (12.0 * g.spacing());
  const Vector expected{{s, -8.0 * s, 0.0, 8.0 * s, -s}};
  EXPECT_LE((w.coefficients() - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(is_skew(w));
}

TEST(CentralDifference, ExactOnPolynomialsOfDegree2R) {
  // The order-2R central difference differentiates x^p exactly for p <= 2R.
  for (int r = 1; r <= 4; ++r) {
    const double h = 0.1;
    const Stencil w = central_difference_stencil(Grid1D(40, 40 * h), r);
    for (int p = 0; p <= 2 * r; ++p) {
      const double x0 = 0.3;
      double acc = 0.0;
      for (int l = -r; l <= r; ++l) acc += w[l] * std::pow(x0 + l * h, p);
      const double exact = p == 0 ? 0.0 : p * std::pow(x0, p - 1);
      EXPECT_NEAR(acc, exact, 1e-8 * std::max(1.0, std::abs(exact))) << "R=" << r << " p=" << p;
    }
  }
}

TEST(StencilJson, RoundTrip) {
  const Stencil w(Vector{{-0.1, 1e-300, 3.0 / 7.0}}, 1.0 / 64.0);
  const Stencil back = stencil_from_json(to_json(w));
  EXPECT_EQ(back.coefficients(), w.coefficients());
  EXPECT_EQ(back.spacing(), w.spacing());
}

TEST(StencilJson, RejectsInconsistentRadius) {
  nlohmann::json j = to_json(centered_difference_stencil(Grid1D(8, 1.0)));
  j["R"] = 2;
  EXPECT_THROW(stencil_from_json(j), ConfigError);
}
