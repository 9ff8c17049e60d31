#pragma once

// Four solvers for
//
//   min 1/2 ||A w - b||^2 + lambda/2 ||w||^2   s.t.  C w = d,  -M <= w <= M
//
// Projected gradient and Nesterov acceleration handle the equality constraint
// only. ADMM splits off the box with a copy z of w; its w-update is an exact
// KKT solve. The reference solver is a primal active-set method that is exact
// for these small, strictly convex problems.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stencil_lab/core.hpp"
#include "stencil_lab/regression.hpp"

namespace stencil_lab {

enum class SolverMethod { ProjectedGradient, Nesterov, Admm, Reference };

inline std::string to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::ProjectedGradient: return "pg";
    case SolverMethod::Nesterov: return "nag";
    case SolverMethod::Admm: return "admm";
    case SolverMethod::Reference: return "ref";
  }
  return "?";
}

inline SolverMethod parse_solver_method(const std::string& name) {
  if (name == "pg") return SolverMethod::ProjectedGradient;
  if (name == "nag") return SolverMethod::Nesterov;
  if (name == "admm") return SolverMethod::Admm;
  if (name == "ref" || name == "reference") return SolverMethod::Reference;
  throw ConfigError("unknown solver method '" + name + "' (expected pg, nag, admm or ref)");
}

struct SolverOptions {
  int max_iters = 500;
  /// Stop once ||w^{k+1} - w^k|| <= tol (ADMM additionally needs ||w - z|| <= tol).
  double tol = 1e-12;
  /// ADMM penalty.
  double rho = 1e-3;
  /// Fixed PG/NAG step; defaults to 1 / lipschitz_estimate.
  std::optional<double> step;
  /// Unset means the method's natural choice: no box for PG/NAG, box for ADMM
  /// and the reference solver. Requesting a box from PG/NAG is an error.
  std::optional<bool> enforce_box;

  void validate() const {
    detail::require(max_iters >= 1, "SolverOptions: max_iters must be >= 1");
    detail::require(tol > 0.0, "SolverOptions: tol must be > 0");
    detail::require(rho > 0.0, "SolverOptions: rho must be > 0");
    if (step) detail::require(*step > 0.0, "SolverOptions: step must be > 0");
  }

  static SolverOptions defaults_for(SolverMethod m) {
    SolverOptions o;
    if (m == SolverMethod::Admm) o.max_iters = 100;
    return o;
  }
};

struct SolverReport {
  SolverMethod method = SolverMethod::Reference;
  Vector w_final;
  std::vector<double> objective;
  std::vector<double> eq_residual;
  std::vector<double> step_diff;
  std::vector<double> elapsed_s;
  int iterations = 0;
  bool converged = false;

  Stencil stencil(double dx) const { return Stencil(w_final, dx); }
  double final_objective() const { return objective.empty() ? std::nan("") : objective.back(); }
};

namespace detail {

class TraceRecorder {
 public:
  explicit TraceRecorder(SolverReport& report)
      : report_(report), start_(std::chrono::steady_clock::now()) {}

  void record(double f, double eq_res, double diff) {
    if (!std::isfinite(f))
      throw NumericalError(to_string(report_.method) + ": objective became non-finite at iteration " +
                           std::to_string(report_.iterations + 1));
    const auto now = std::chrono::steady_clock::now();
    report_.objective.push_back(f);
    report_.eq_residual.push_back(eq_res);
    report_.step_diff.push_back(diff);
    report_.elapsed_s.push_back(std::chrono::duration<double>(now - start_).count());
    ++report_.iterations;
  }

 private:
  SolverReport& report_;
  std::chrono::steady_clock::time_point start_;
};

inline void check_dimensions(const RegressionSystem& sys, const ConstraintSet& cs) {
  require(sys.dimension() == cs.dimension(), "solver: regression system has " +
                                                 std::to_string(sys.dimension()) +
                                                 " unknowns but constraints have " +
                                                 std::to_string(cs.dimension()));
}

inline double step_size(const RegressionSystem& sys, const SolverOptions& opts) {
  if (opts.step) return *opts.step;
  const double lip = lipschitz_estimate(sys);
  if (!(lip > 0.0)) throw NumericalError("solver: Lipschitz estimate is zero; pass an explicit step");
  return 1.0 / lip;
}

inline void reject_box(SolverMethod m, const SolverOptions& opts) {
  if (opts.enforce_box.value_or(false))
    throw ConfigError(to_string(m) +
                      ": box bounds are not supported; projecting onto C w = d and then onto the box "
                      "is not the projection onto their intersection. Use admm or ref.");
}

}  // namespace detail

/// w^{k+1} = P(w^k - alpha grad f(w^k)), starting from P(0).
inline SolverReport solve_pg(const RegressionSystem& sys, const ConstraintSet& cs,
                             const SolverOptions& opts = SolverOptions::defaults_for(SolverMethod::ProjectedGradient)) {
  opts.validate();
  detail::check_dimensions(sys, cs);
  detail::reject_box(SolverMethod::ProjectedGradient, opts);
  SolverReport report;
  report.method = SolverMethod::ProjectedGradient;
  detail::TraceRecorder trace(report);
  const double alpha = detail::step_size(sys, opts);

  Vector w = cs.project(Vector::Zero(sys.dimension()));
  for (int k = 0; k < opts.max_iters; ++k) {
    const Vector grad = objective_and_gradient(sys, w).gradient;
    Vector next = cs.project(w - alpha * grad);
    const double diff = (next - w).norm();
    w = std::move(next);
    trace.record(objective(sys, w), cs.residual(w), diff);
    if (diff <= opts.tol) {
      report.converged = true;
      break;
    }
  }
  report.w_final = w;
  return report;
}

/// t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2, beta_k = (t_k - 1) / t_{k+1}, t_0 = 1.
class NesterovSchedule {
 public:
  double t() const { return t_; }

  /// Advances t and returns the extrapolation weight for this step.
  double next_beta() {
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_ * t_));
    const double beta = (t_ - 1.0) / t_next;
    t_ = t_next;
    return beta;
  }

 private:
  double t_ = 1.0;
};

/// y^k = w^k + beta_k (w^k - w^{k-1}), w^{k+1} = P(y^k - alpha grad f(y^k)).
/// The objective trace is not monotone in general.
inline SolverReport solve_nag(const RegressionSystem& sys, const ConstraintSet& cs,
                              const SolverOptions& opts = SolverOptions::defaults_for(SolverMethod::Nesterov)) {
  opts.validate();
  detail::check_dimensions(sys, cs);
  detail::reject_box(SolverMethod::Nesterov, opts);
  SolverReport report;
  report.method = SolverMethod::Nesterov;
  detail::TraceRecorder trace(report);
  const double alpha = detail::step_size(sys, opts);

  Vector w = cs.project(Vector::Zero(sys.dimension()));
  Vector w_prev = w;
  NesterovSchedule schedule;
  for (int k = 0; k < opts.max_iters; ++k) {
    const double beta = schedule.next_beta();
    const Vector y = w + beta * (w - w_prev);
    const Vector grad = objective_and_gradient(sys, y).gradient;
    Vector next = cs.project(y - alpha * grad);
    const double diff = (next - w).norm();
    w_prev = std::move(w);
    w = std::move(next);
    trace.record(objective(sys, w), cs.residual(w), diff);
    if (diff <= opts.tol) {
      report.converged = true;
      break;
    }
  }
  report.w_final = w;
  return report;
}

/// ADMM state machine. The saddle matrix
///   [[A^T A + (lambda + rho) I, C^T], [C, 0]]
/// is factored once; each iterate() is one w-, z- and u-update.
class AdmmSolver {
 public:
  AdmmSolver(const RegressionSystem& sys, const ConstraintSet& cs, const SolverOptions& opts)
      : sys_(sys), cs_(cs), rho_(opts.rho) {
    opts.validate();
    detail::check_dimensions(sys, cs);
    n_ = sys.dimension();
    m_ = cs.rows();
    box_ = opts.enforce_box.value_or(true) ? sys.box_bound() : std::numeric_limits<double>::infinity();
    Matrix kkt = Matrix::Zero(n_ + m_, n_ + m_);
    kkt.topLeftCorner(n_, n_) = sys.gram() + (sys.lambda() + rho_) * Matrix::Identity(n_, n_);
    kkt.topRightCorner(n_, m_) = cs.matrix().transpose();
    kkt.bottomLeftCorner(m_, n_) = cs.matrix();
    lu_.compute(kkt);
    if (!lu_.isInvertible()) throw NumericalError("admm: KKT matrix is singular");
    w_ = z_ = u_ = Vector::Zero(n_);
  }

  void reset(Vector w, Vector z, Vector u) {
    detail::require(w.size() == n_ && z.size() == n_ && u.size() == n_, "admm: state dimension mismatch");
    w_ = std::move(w);
    z_ = std::move(z);
    u_ = std::move(u);
  }

  void iterate() {
    Vector rhs(n_ + m_);
    rhs.head(n_) = sys_.gram_rhs() + rho_ * (z_ - u_);
    rhs.tail(m_) = cs_.rhs();
    w_ = lu_.solve(rhs).head(n_);
    z_ = (w_ + u_).cwiseMax(-box_).cwiseMin(box_);
    u_ += w_ - z_;
  }

  const Vector& w() const { return w_; }
  const Vector& z() const { return z_; }
  const Vector& u() const { return u_; }

 private:
  const RegressionSystem& sys_;
  const ConstraintSet& cs_;
  double rho_;
  double box_;
  Eigen::Index n_ = 0;
  Eigen::Index m_ = 0;
  Eigen::FullPivLU<Matrix> lu_;
  Vector w_, z_, u_;
};

/// Starts from w = z = u = 0 and returns the box-feasible copy z. Traces record
/// the KKT iterate w.
inline SolverReport solve_admm(const RegressionSystem& sys, const ConstraintSet& cs,
                               const SolverOptions& opts = SolverOptions::defaults_for(SolverMethod::Admm)) {
  AdmmSolver admm(sys, cs, opts);
  SolverReport report;
  report.method = SolverMethod::Admm;
  detail::TraceRecorder trace(report);
  for (int k = 0; k < opts.max_iters; ++k) {
    const Vector prev = admm.w();
    admm.iterate();
    const double diff = (admm.w() - prev).norm();
    trace.record(objective(sys, admm.w()), cs.residual(admm.w()), diff);
    if (diff <= opts.tol && (admm.w() - admm.z()).norm() <= opts.tol) {
      report.converged = true;
      break;
    }
  }
  report.w_final = admm.z();
  return report;
}

namespace detail {

/// Solves [[H, G^T], [G, 0]] [x; y] = [r; s].
inline std::pair<Vector, Vector> solve_saddle(const Matrix& h, const Matrix& g, const Vector& r, const Vector& s) {
  const Eigen::Index n = h.rows();
  const Eigen::Index m = g.rows();
  Matrix k = Matrix::Zero(n + m, n + m);
  k.topLeftCorner(n, n) = h;
  k.topRightCorner(n, m) = g.transpose();
  k.bottomLeftCorner(m, n) = g;
  Vector rhs(n + m);
  rhs << r, s;
  Eigen::FullPivLU<Matrix> lu(k);
  if (!lu.isInvertible()) throw NumericalError("reference solver: KKT matrix is singular");
  const Vector sol = lu.solve(rhs);
  return {sol.head(n), sol.tail(m)};
}

}  // namespace detail

/// Equality-constrained KKT solve; if that point violates the box, a primal
/// active-set loop adds and releases bound constraints (starting from the
/// minimum-norm point of C w = d) until the KKT conditions hold to 1e-10.
inline SolverReport solve_reference(const RegressionSystem& sys, const ConstraintSet& cs,
                                    const SolverOptions& opts = SolverOptions::defaults_for(SolverMethod::Reference)) {
  opts.validate();
  detail::check_dimensions(sys, cs);
  SolverReport report;
  report.method = SolverMethod::Reference;
  detail::TraceRecorder trace(report);

  const Eigen::Index n = sys.dimension();
  const Matrix h = sys.hessian();
  const Vector g = -sys.gram_rhs();
  const double box = opts.enforce_box.value_or(true) ? sys.box_bound() : std::numeric_limits<double>::infinity();

  // Closed-form equality-constrained optimum.
  Vector w = detail::solve_saddle(h, cs.matrix(), -g, cs.rhs()).first;
  trace.record(objective(sys, w), cs.residual(w), w.norm());
  if (w.cwiseAbs().maxCoeff() <= box) {
    report.converged = true;
    report.w_final = w;
    return report;
  }

  Vector start = cs.project(Vector::Zero(n));
  if (start.cwiseAbs().maxCoeff() > box)
    throw NumericalError("reference solver: minimum-norm point of C w = d lies outside the box");
  w = start;

  // side[i]: -1 fixed at -M, +1 fixed at +M, 0 free.
  std::vector<int> side(static_cast<std::size_t>(n), 0);
  const double scale = std::max({1.0, g.cwiseAbs().maxCoeff(), h.cwiseAbs().maxCoeff() * box});
  const long limit = (n < 30 ? (1L << n) : (1L << 30)) + n;

  for (long it = 0; it < limit; ++it) {
    std::vector<Eigen::Index> fixed;
    for (Eigen::Index i = 0; i < n; ++i)
      if (side[i] != 0) fixed.push_back(i);
    const Eigen::Index m_eq = cs.rows();
    Matrix active = Matrix::Zero(m_eq + static_cast<Eigen::Index>(fixed.size()), n);
    active.topRows(m_eq) = cs.matrix();
    for (std::size_t r = 0; r < fixed.size(); ++r) active(m_eq + static_cast<Eigen::Index>(r), fixed[r]) = 1.0;

    const Vector grad = h * w + g;
    auto [p, nu] = detail::solve_saddle(h, active, -grad, Vector::Zero(active.rows()));

    if (p.cwiseAbs().maxCoeff() <= 1e-13 * (1.0 + w.cwiseAbs().maxCoeff())) {
      // Stationary on the working set: H w + g + active^T nu = 0. A bound
      // at -M needs nu <= 0, a bound at +M needs nu >= 0.
      Eigen::Index worst = -1;
      double worst_mult = -1e-10 * scale;
      for (std::size_t r = 0; r < fixed.size(); ++r) {
        const Eigen::Index i = fixed[r];
        const double mult = side[i] * nu[m_eq + static_cast<Eigen::Index>(r)];
        if (mult < worst_mult) {
          worst_mult = mult;
          worst = i;
        }
      }
      if (worst < 0) {
        const double stationarity = (grad + active.transpose() * nu).cwiseAbs().maxCoeff();
        if (stationarity > 1e-10 * scale)
          throw NumericalError("reference solver: KKT stationarity residual " + std::to_string(stationarity));
        trace.record(objective(sys, w), cs.residual(w), 0.0);
        report.converged = true;
        report.w_final = w;
        return report;
      }
      side[worst] = 0;
      trace.record(objective(sys, w), cs.residual(w), 0.0);
      continue;
    }

    // Components at rounding level are ignored: a coordinate tied by C w = d
    // to a fixed one moves by ~1e-16 and must not enter the working set, or
    // the active rows become dependent.
    const double p_floor = 1e-12 * p.cwiseAbs().maxCoeff();
    double alpha = 1.0;
    Eigen::Index blocking = -1;
    int blocking_side = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (side[i] != 0 || std::abs(p[i]) <= p_floor) continue;
      if (p[i] > 0.0 && w[i] + p[i] > box) {
        const double a = std::max(0.0, (box - w[i]) / p[i]);
        if (a < alpha) alpha = a, blocking = i, blocking_side = 1;
      } else if (p[i] < 0.0 && w[i] + p[i] < -box) {
        const double a = std::max(0.0, (-box - w[i]) / p[i]);
        if (a < alpha) alpha = a, blocking = i, blocking_side = -1;
      }
    }
    const Vector prev = w;
    w += alpha * p;
    if (blocking >= 0) {
      side[blocking] = blocking_side;
      w[blocking] = blocking_side * box;
    }
    trace.record(objective(sys, w), cs.residual(w), (w - prev).norm());
  }
  throw NumericalError("reference solver: active set did not settle within " + std::to_string(limit) +
                       " iterations");
}

inline SolverReport solve(SolverMethod method, const RegressionSystem& sys, const ConstraintSet& cs,
                          const SolverOptions& opts) {
  switch (method) {
    case SolverMethod::ProjectedGradient: return solve_pg(sys, cs, opts);
    case SolverMethod::Nesterov: return solve_nag(sys, cs, opts);
    case SolverMethod::Admm: return solve_admm(sys, cs, opts);
    case SolverMethod::Reference: return solve_reference(sys, cs, opts);
  }
  throw ConfigError("unknown solver method");
}

inline SolverReport solve(SolverMethod method, const RegressionSystem& sys, const ConstraintSet& cs) {
  return solve(method, sys, cs, SolverOptions::defaults_for(method));
}

}  // namespace stencil_lab
