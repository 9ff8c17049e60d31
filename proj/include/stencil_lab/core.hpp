#pragma once

// Grids, stencils and the periodic convolution operator they define, plus the
// dx-weighted inner product and the discrete electromagnetic energy.
//
// Indexing: a stencil of radius R stores its coefficients w_{-R}..w_{R} at
// positions 0..2R, i.e. offset l lives at position l + R. The same mapping is
// used by regression assembly and by the Fourier symbol.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "stencil_lab/errors.hpp"

namespace stencil_lab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Uniform periodic grid x_i = i * dx on [0, L), dx = L / N.
class Grid1D {
 public:
  Grid1D(int cells, double length) : n_(cells), length_(length), dx_(length / cells) {
    detail::require(cells >= 3, "Grid1D: need at least 3 cells, got " + std::to_string(cells));
    detail::require(std::isfinite(length) && length > 0.0, "Grid1D: length must be positive and finite");
  }

  int size() const { return n_; }
  double length() const { return length_; }
  double spacing() const { return dx_; }
  double point(int i) const { return i * dx_; }

  Vector points() const {
    Vector x(n_);
    for (int i = 0; i < n_; ++i) x[i] = point(i);
    return x;
  }

  bool operator==(const Grid1D&) const = default;

 private:
  int n_;
  double length_;
  double dx_;
};

/// Coefficients w_{-R}..w_{R} of a periodic convolution (units 1/length).
///
/// `spacing` records the grid spacing the stencil was built for; it is
/// metadata (serialized alongside the coefficients) and does not enter
/// apply_stencil.
class Stencil {
 public:
  Stencil(Vector coefficients, double spacing) : w_(std::move(coefficients)), dx_(spacing) {
    detail::require(w_.size() >= 3 && w_.size() % 2 == 1,
                    "Stencil: need 2R+1 coefficients with R >= 1, got " + std::to_string(w_.size()));
    detail::require(w_.allFinite(), "Stencil: coefficients must be finite");
    detail::require(std::isfinite(dx_) && dx_ > 0.0, "Stencil: spacing must be positive");
  }

  static Stencil zero(int radius, double spacing) {
    detail::require(radius >= 1, "Stencil: radius must be >= 1");
    return Stencil(Vector::Zero(2 * radius + 1), spacing);
  }

  int radius() const { return static_cast<int>(w_.size() - 1) / 2; }
  int width() const { return static_cast<int>(w_.size()); }
  double spacing() const { return dx_; }
  const Vector& coefficients() const { return w_; }

  /// Coefficient at signed offset l in [-R, R].
  double operator[](int offset) const { return w_[offset + radius()]; }

  Stencil scaled(double factor) const { return Stencil(factor * w_, dx_); }

 private:
  Vector w_;
  double dx_;
};

/// Electric and magnetic nodal values on the same grid.
struct FieldPair {
  Vector E;
  Vector H;

  void check(const Grid1D& grid) const {
    detail::require(E.size() == grid.size() && H.size() == grid.size(),
                    "FieldPair: E and H must both have length N = " + std::to_string(grid.size()));
  }
};

/// Discrete electromagnetic energy; nonnegative by construction.
struct Energy {
  double value = 0.0;
};

namespace detail {

inline void require_fits(const Stencil& w, int n) {
  require(n >= w.width(), "stencil of radius " + std::to_string(w.radius()) +
                              " needs N >= 2R+1 = " + std::to_string(w.width()) + ", got N = " +
                              std::to_string(n));
}

inline int wrap(int i, int n) {
  const int r = i % n;
  return r < 0 ? r + n : r;
}

}  // namespace detail

/// (Du)_i = sum_l w_l u_{(i+l) mod N}.
inline Vector apply_stencil(const Stencil& w, const Vector& u, const Grid1D& grid) {
  const int n = grid.size();
  detail::require(u.size() == n, "apply_stencil: vector length " + std::to_string(u.size()) +
                                     " does not match grid size " + std::to_string(n));
  detail::require_fits(w, n);
  const int r = w.radius();
  Vector out = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int l = -r; l <= r; ++l) acc += w[l] * u[detail::wrap(i + l, n)];
    out[i] = acc;
  }
  return out;
}

/// Dense circulant matrix D with D_ij = w_{(j-i) mod N}, so that D u equals
/// apply_stencil(w, u).
///
/// The row index convention follows the convolution sum (Du)_i = sum_l w_l
/// u_{i+l}: entry (i, i+l) carries w_l.
inline Matrix operator_matrix(const Stencil& w, int n) {
  detail::require_fits(w, n);
  Matrix d = Matrix::Zero(n, n);
  const int r = w.radius();
  for (int i = 0; i < n; ++i)
    for (int l = -r; l <= r; ++l) d(i, detail::wrap(i + l, n)) += w[l];
  return d;
}

/// <u, v> = dx * sum_i u_i v_i.
inline double inner_product(const Vector& u, const Vector& v, const Grid1D& grid) {
  detail::require(u.size() == grid.size() && v.size() == grid.size(),
                  "inner_product: vector lengths must equal N");
  return grid.spacing() * u.dot(v);
}

inline double grid_norm(const Vector& u, const Grid1D& grid) {
  return std::sqrt(inner_product(u, u, grid));
}

/// 1/2 ||E||^2 + 1/2 ||H||^2 in the dx-weighted norm.
inline Energy discrete_energy(const FieldPair& f, const Grid1D& grid) {
  f.check(grid);
  return Energy{0.5 * grid.spacing() * (f.E.squaredNorm() + f.H.squaredNorm())};
}

/// (-1/(2dx), 0, 1/(2dx)).
inline Stencil centered_difference_stencil(const Grid1D& grid) {
  const double c = 1.0 / (2.0 * grid.spacing());
  return Stencil(Vector{{-c, 0.0, c}}, grid.spacing());
}

/// Standard central difference of order 2R:
/// w_l = (-1)^{l+1} (R!)^2 / (l (R-l)! (R+l)!) / dx, w_{-l} = -w_l.
inline Stencil central_difference_stencil(const Grid1D& grid, int radius) {
  detail::require(radius >= 1, "central_difference_stencil: radius must be >= 1");
  Vector w = Vector::Zero(2 * radius + 1);
  const double log_r_fact = std::lgamma(radius + 1.0);
  for (int l = 1; l <= radius; ++l) {
    const double mag = std::exp(2.0 * log_r_fact - std::lgamma(radius - l + 1.0) -
                                std::lgamma(radius + l + 1.0)) /
                       l;
    const double c = (l % 2 == 1 ? mag : -mag) / grid.spacing();
    w[radius + l] = c;
    w[radius - l] = -c;
  }
  return Stencil(std::move(w), grid.spacing());
}

/// True when w_0 == 0 and w_{-l} == -w_{l} up to `tol` (absolute).
inline bool is_skew(const Stencil& w, double tol = 0.0) {
  const int r = w.radius();
  if (std::abs(w[0]) > tol) return false;
  for (int l = 1; l <= r; ++l)
    if (std::abs(w[-l] + w[l]) > tol) return false;
  return true;
}

// JSON: {"R": int, "w": [floats], "dx": float}

inline nlohmann::json to_json(const Stencil& w) {
  nlohmann::json j;
  j["R"] = w.radius();
  j["w"] = std::vector<double>(w.coefficients().begin(), w.coefficients().end());
  j["dx"] = w.spacing();
  return j;
}

inline Stencil stencil_from_json(const nlohmann::json& j) {
  try {
    const int r = j.at("R").get<int>();
    const auto coeffs = j.at("w").get<std::vector<double>>();
    const double dx = j.at("dx").get<double>();
    detail::require(static_cast<int>(coeffs.size()) == 2 * r + 1,
                    "stencil JSON: 'w' must have 2R+1 entries");
    return Stencil(Eigen::Map<const Vector>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size())), dx);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("stencil JSON: ") + e.what());
  }
}

}  // namespace stencil_lab
