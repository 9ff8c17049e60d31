#pragma once

// Thin wrapper over Eigen's FFT with the unitary normalization
// u_hat_m = N^{-1/2} sum_j u_j e^{-2 pi i j m / N}, so that
// sum_j |u_j|^2 = sum_m |u_hat_m|^2.

#include <cmath>
#include <complex>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "stencil_lab/core.hpp"

namespace stencil_lab {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;

/// Signed mode number in the symmetric range: 0..floor((N-1)/2) and
/// -floor(N/2)..-1. For even N the Nyquist index N/2 maps to -N/2.
inline int signed_mode(int index, int n) { return 2 * index < n ? index : index - n; }

class UnitaryDft {
 public:
  ComplexVector forward(const Vector& u) {
    ComplexVector in = u.cast<Complex>();
    return forward(in);
  }

  ComplexVector forward(const ComplexVector& u) {
    ComplexVector out(u.size());
    fft_.fwd(out, u);
    return out / std::sqrt(static_cast<double>(u.size()));
  }

  ComplexVector inverse(const ComplexVector& u_hat) {
    ComplexVector out(u_hat.size());
    fft_.inv(out, u_hat);  // Eigen scales by 1/N
    return out * std::sqrt(static_cast<double>(u_hat.size()));
  }

 private:
  Eigen::FFT<double> fft_;
};

}  // namespace stencil_lab
