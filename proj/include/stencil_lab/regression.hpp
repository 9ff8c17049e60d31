#pragma once

// Least-squares system, skew-symmetry constraints and the affine projection
// used by the first-order solvers.

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "stencil_lab/core.hpp"
#include "stencil_lab/training.hpp"

namespace stencil_lab {

/// min 1/2 ||A w - b||^2 + lambda/2 ||w||^2 with box bound |w_l| <= M.
///
/// The Gram matrix A^T A and A^T b are formed once at construction; A is kept
/// so that objective values are computed from the residual rather than from
/// the cancellation-prone expanded quadratic.
class RegressionSystem {
 public:
  RegressionSystem(Matrix design, Vector targets, double lambda, double box_bound)
      : a_(std::move(design)), b_(std::move(targets)), lambda_(lambda), box_(box_bound) {
    detail::require(a_.rows() >= 1 && a_.cols() >= 1, "RegressionSystem: empty design matrix");
    detail::require(a_.rows() == b_.size(), "RegressionSystem: A has " + std::to_string(a_.rows()) +
                                                " rows but b has " + std::to_string(b_.size()) + " entries");
    detail::require(std::isfinite(lambda_) && lambda_ >= 0.0, "RegressionSystem: lambda must be >= 0");
    detail::require(box_ > 0.0, "RegressionSystem: box bound M must be > 0");
    gram_ = a_.transpose() * a_;
    rhs_ = a_.transpose() * b_;
  }

  const Matrix& design() const { return a_; }
  const Vector& targets() const { return b_; }
  double lambda() const { return lambda_; }
  double box_bound() const { return box_; }
  Eigen::Index dimension() const { return a_.cols(); }

  /// A^T A and A^T b.
  const Matrix& gram() const { return gram_; }
  const Vector& gram_rhs() const { return rhs_; }

  /// A^T A + lambda I.
  Matrix hessian() const {
    return gram_ + lambda_ * Matrix::Identity(dimension(), dimension());
  }

  RegressionSystem with_box(double box_bound) const {
    return RegressionSystem(a_, b_, lambda_, box_bound);
  }

 private:
  Matrix a_;
  Vector b_;
  double lambda_;
  double box_;
  Matrix gram_;
  Vector rhs_;
};

/// One H-patch row (target dE/dt_i) and one E-patch row (target dH/dt_i) per
/// grid index; rows are sample-major, all H rows of a sample before its E
/// rows, index ascending.
inline RegressionSystem assemble_regression(const TrainingSet& ts, int radius, double lambda = 1e-6,
                                            double box_bound = 100.0) {
  ts.check();
  detail::require(radius >= 1, "assemble_regression: radius must be >= 1");
  const int n = ts.grid.size();
  detail::require(n >= 2 * radius + 1, "assemble_regression: radius " + std::to_string(radius) +
                                           " too large for N = " + std::to_string(n));
  const int width = 2 * radius + 1;
  const Eigen::Index rows = 2 * static_cast<Eigen::Index>(ts.n_sims()) * n;
  Matrix a(rows, width);
  Vector b(rows);
  Eigen::Index row = 0;
  auto emit = [&](const Vector& field, const Vector& target) {
    for (int i = 0; i < n; ++i, ++row) {
      for (int l = -radius; l <= radius; ++l) a(row, l + radius) = field[detail::wrap(i + l, n)];
      b[row] = target[i];
    }
  };
  for (int s = 0; s < ts.n_sims(); ++s) {
    emit(ts.states[s].H, ts.derivatives[s].E);
    emit(ts.states[s].E, ts.derivatives[s].H);
  }
  return RegressionSystem(std::move(a), std::move(b), lambda, box_bound);
}

/// Linear equality constraints C w = d with (C C^T)^{-1} factored once.
class ConstraintSet {
 public:
  ConstraintSet(Matrix c, Vector d) : c_(std::move(c)), d_(std::move(d)) {
    detail::require(c_.rows() == d_.size(), "ConstraintSet: C and d row counts differ");
    if (c_.rows() > 0) {
      const Matrix cct = c_ * c_.transpose();
      Eigen::FullPivLU<Matrix> rank_check(cct);
      if (rank_check.rank() < c_.rows())
        throw ConfigError("ConstraintSet: C must have full row rank");
      cct_llt_.compute(cct);
    }
  }

  const Matrix& matrix() const { return c_; }
  const Vector& rhs() const { return d_; }
  Eigen::Index rows() const { return c_.rows(); }
  Eigen::Index dimension() const { return c_.cols(); }

  /// z - C^T (C C^T)^{-1} (C z - d).
  Vector project(const Vector& z) const {
    detail::require(z.size() == c_.cols(), "project_affine: dimension mismatch");
    if (c_.rows() == 0) return z;
    return z - c_.transpose() * cct_llt_.solve(c_ * z - d_);
  }

  /// ||C w - d||_2.
  double residual(const Vector& w) const {
    if (c_.rows() == 0) return 0.0;
    return (c_ * w - d_).norm();
  }

 private:
  Matrix c_;
  Vector d_;
  Eigen::LLT<Matrix> cct_llt_;
};

/// Unconstrained problem of dimension n (no rows).
inline ConstraintSet no_constraints(Eigen::Index n) { return ConstraintSet(Matrix(0, n), Vector(0)); }

/// Row 0 selects w_0; row l sums w_{-l} and w_{+l}; d = 0.
inline ConstraintSet build_skew_constraints(int radius) {
  detail::require(radius >= 1, "build_skew_constraints: radius must be >= 1");
  Matrix c = Matrix::Zero(radius + 1, 2 * radius + 1);
  c(0, radius) = 1.0;
  for (int l = 1; l <= radius; ++l) {
    c(l, radius - l) = 1.0;
    c(l, radius + l) = 1.0;
  }
  return ConstraintSet(std::move(c), Vector::Zero(radius + 1));
}

inline Vector project_affine(const Vector& z, const ConstraintSet& cs) { return cs.project(z); }

struct ObjectiveValue {
  double value = 0.0;
  Vector gradient;
};

inline double objective(const RegressionSystem& sys, const Vector& w) {
  detail::require(w.size() == sys.dimension(), "objective: dimension mismatch");
  return 0.5 * (sys.design() * w - sys.targets()).squaredNorm() + 0.5 * sys.lambda() * w.squaredNorm();
}

/// f(w) = 1/2 ||A w - b||^2 + lambda/2 ||w||^2, grad f = A^T (A w - b) + lambda w.
inline ObjectiveValue objective_and_gradient(const RegressionSystem& sys, const Vector& w) {
  return {objective(sys, w), sys.gram() * w - sys.gram_rhs() + sys.lambda() * w};
}

/// Upper bound on ||A^T A||_2 + lambda: 30 power iterations on the Gram
/// matrix, Rayleigh quotient scaled by 1.01.
inline double lipschitz_estimate(const RegressionSystem& sys) {
  const Matrix& g = sys.gram();
  Vector v = Vector::Ones(g.rows()).normalized();
  double rayleigh = 0.0;
  for (int it = 0; it < 30; ++it) {
    Vector gv = g * v;
    const double norm = gv.norm();
    if (norm == 0.0) {
      rayleigh = 0.0;
      break;
    }
    v = gv / norm;
    rayleigh = v.dot(g * v);
  }
  return 1.01 * rayleigh + sys.lambda();
}

struct LeastSquaresSolution {
  Vector w;
  /// 2-norm condition number of A^T A + lambda I.
  double condition = 0.0;
};

/// Ridge solution of the unconstrained problem via the normal equations.
inline LeastSquaresSolution solve_unconstrained(const RegressionSystem& sys) {
  const Matrix h = sys.hessian();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  Eigen::LDLT<Matrix> ldlt(h);
  if (ldlt.info() != Eigen::Success || lo <= 0.0)
    throw NumericalError("solve_unconstrained: normal equations are singular (use lambda > 0)");
  return {ldlt.solve(sys.gram_rhs()), hi / lo};
}

/// Diagnostics dump: dimensions plus the Gram matrix and A^T b.
inline nlohmann::json gram_to_json(const RegressionSystem& sys) {
  nlohmann::json j;
  j["rows"] = sys.design().rows();
  j["cols"] = sys.design().cols();
  j["lambda"] = sys.lambda();
  j["M"] = sys.box_bound();
  nlohmann::json gram = nlohmann::json::array();
  for (Eigen::Index r = 0; r < sys.gram().rows(); ++r) {
    std::vector<double> row(sys.gram().cols());
    for (Eigen::Index c = 0; c < sys.gram().cols(); ++c) row[c] = sys.gram()(r, c);
    gram.push_back(row);
  }
  j["gram"] = gram;
  j["gram_rhs"] = std::vector<double>(sys.gram_rhs().begin(), sys.gram_rhs().end());
  return j;
}

}  // namespace stencil_lab
