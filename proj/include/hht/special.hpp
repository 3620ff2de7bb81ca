// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <numbers>

namespace hht {

using cplx = std::complex<double>;

inline constexpr cplx kI{0.0, 1.0};

/// Sign of the imaginary part, +1 or -1. Callers guarantee Im z != 0.
inline double sgn_im(cplx z) { return z.imag() > 0.0 ? 1.0 : -1.0; }

/// Principal-branch power z^p (branch cut on the negative real axis).
inline cplx ppow(cplx z, double p) {
  if (z == cplx{0.0, 0.0}) return p > 0.0 ? cplx{0.0, 0.0} : cplx{INFINITY, 0.0};
  return std::exp(p * std::log(z));
}

/// e^x - 1 without cancellation for small |x|.
inline cplx expm1(cplx x) {
  const double er = std::expm1(x.real());
  const double s = std::sin(0.5 * x.imag());
  // e^a cos b - 1 = expm1(a) cos b - 2 sin^2(b/2)
  const double re = er * std::cos(x.imag()) - 2.0 * s * s;
  const double im = std::exp(x.real()) * std::sin(x.imag());
  return {re, im};
}

/// log(1 + x), principal branch, accurate for small |x|.
inline cplx log1p(cplx x) {
  const double xr = x.real();
  const double xi = x.imag();
  const double mod = 0.5 * std::log1p(2.0 * xr + xr * xr + xi * xi);
  return {mod, std::atan2(xi, 1.0 + xr)};
}

/// (1 + x)^p - 1, principal branch, accurate for small |x|.
inline cplx pow1p_m1(cplx x, double p) { return expm1(p * log1p(x)); }

/// e^x - 1 - x, accurate for small |x|.
inline cplx exp_m1_mx(cplx x) {
  if (std::abs(x) < 0.5) {
    cplx term = 0.5 * x * x;
    cplx sum = term;
    for (int k = 3; k < 40; ++k) {
      term *= x / static_cast<double>(k);
      sum += term;
      if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return expm1(x) - x;
}

/// Gamma function on the reals. Negative non-integer arguments go through
/// the reflection formula inside std::tgamma.
inline double gamma_fn(double x) { return std::tgamma(x); }

}  // namespace hht
