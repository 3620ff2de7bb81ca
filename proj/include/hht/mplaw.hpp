// SPDX-License-Identifier: Apache-2.0
//
// Marchenko-Pastur law: density, atom, CDF, Stieltjes transform
// m_y(z) = int dmu(x) / (z - x) and the derived quantities the covariance
// kernel needs.
#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "hht/errors.hpp"
#include "hht/quadrature.hpp"
#include "hht/special.hpp"

namespace hht {

struct MPParams {
  double y = 1.0;
  double a = 0.0;  ///< lower edge (1 - sqrt y)^2
  double b = 4.0;  ///< upper edge (1 + sqrt y)^2

  static MPParams make(double y) {
    if (!(y > 0.0) || !std::isfinite(y)) throw ValidationError("aspect ratio y must be positive");
    const double r = std::sqrt(y);
    return {y, (1.0 - r) * (1.0 - r), (1.0 + r) * (1.0 + r)};
  }

  /// Mass of the atom at zero, 1 - 1/y when y > 1.
  double atom_mass() const { return y > 1.0 ? 1.0 - 1.0 / y : 0.0; }
};

inline double mp_density(double x, double y) {
  if (!(x > 0.0)) throw DomainError("mp_density: x must be positive");
  const auto mp = MPParams::make(y);
  if (x <= mp.a || x >= mp.b) return 0.0;
  return std::sqrt((mp.b - x) * (x - mp.a)) / (2.0 * std::numbers::pi * x * y);
}

/// CDF of the MP law (atom included), by quadrature of the density.
inline double mp_cdf(double x, double y, const QuadratureConfig& cfg = {}) {
  const auto mp = MPParams::make(y);
  if (x < 0.0) return 0.0;
  if (x >= mp.b) return 1.0;
  double acc = mp.atom_mass();
  if (x <= mp.a) return acc;
  auto dens = [&](double t) {
    return std::sqrt((mp.b - t) * (t - mp.a)) / (2.0 * std::numbers::pi * t * y);
  };
  acc += integrate_interval(dens, mp.a, x, cfg).value;
  return std::min(acc, 1.0);
}

inline void require_nonreal(cplx z, const char* where) {
  if (!(z.imag() != 0.0) || !std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    std::ostringstream os;
    os << where << ": z must be finite with non-zero imaginary part, got " << z;
    throw DomainError(os.str());
  }
}

/// Stieltjes transform on the physical sheet together with the square root
/// T of the discriminant (z-1-y)^2 - 4y on the matching branch, i.e. the value
/// for which z m = (z - (1-y) + T) / (2y).
struct MPBranch {
  cplx m;
  cplx sqrt_disc;
};

/// Both roots of z y m^2 + (1 - z - y) m + 1 = 0 are computed in cancellation
/// free form; the physical one is selected by Im(m) Im(z) < 0.
inline MPBranch mp_branch(cplx z, double y) {
  require_nonreal(z, "mp_stieltjes");
  if (!(y > 0.0)) throw ValidationError("aspect ratio y must be positive");
  const cplx qa = z * y;
  const cplx qb = 1.0 - z - y;
  const cplx disc = std::sqrt(qb * qb - 4.0 * qa);
  const cplx q = -0.5 * (std::abs(qb + disc) >= std::abs(qb - disc) ? qb + disc : qb - disc);
  const cplx r1 = q / qa;
  const cplx r2 = 1.0 / q;
  const double s = sgn_im(z);
  const bool ok1 = r1.imag() * s < 0.0;
  const bool ok2 = r2.imag() * s < 0.0;
  cplx m;
  if (ok1 && !ok2) {
    m = r1;
  } else if (ok2 && !ok1) {
    m = r2;
  } else {
    // both or neither satisfy the sign rule (can only happen through
    // rounding right at the real axis); keep the one closer to 1/z
    m = std::abs(r1 * z - 1.0) < std::abs(r2 * z - 1.0) ? r1 : r2;
  }
  return {m, 2.0 * y * z * m - (z - (1.0 - y))};
}

inline cplx mp_stieltjes(cplx z, double y) { return mp_branch(z, y).m; }

/// |z y m^2 + (1 - z - y) m + 1|.
inline double mp_quadratic_residual(cplx z, double y, cplx m) {
  return std::abs(z * y * m * m + (1.0 - z - y) * m + 1.0);
}

/// m_y(z) through the companion law: 1 / (z - (z/y) m_{1/y}(z/y)).
/// Independent of mp_branch's root choice at ratio y; used as a cross-check.
inline cplx mp_stieltjes_companion(cplx z, double y) {
  const cplx zc = z / y;
  return 1.0 / (z - zc * mp_stieltjes(zc, 1.0 / y));
}

/// d/dz [z m_y(z)] = (1 + (z-1-y)/T) / (2y) with T on the branch of m.
inline cplx d_zm(cplx z, double y) {
  const auto br = mp_branch(z, y);
  const cplx w = z - 1.0 - y;
  const cplx t = br.sqrt_disc;
  // T + w = -4y / (T - w) when T and -w nearly coincide
  if (std::abs(t + w) < std::abs(t - w)) return -2.0 / (t * (t - w));
  return (t + w) / (2.0 * y * t);
}

/// kappa(z) = i sgn(Im z) z m_y(z), so that K(z, t) = t kappa(z).
/// Re kappa > 0 is the branch-safety precondition of every complex power in
/// the kernel and is checked on each call.
inline cplx kappa(cplx z, double y) {
  const cplx zm = z * mp_stieltjes(z, y);
  const cplx k = kI * sgn_im(z) * zm;
  if (!(k.real() > 0.0)) {
    std::ostringstream os;
    os << "kappa: Re kappa <= 0 at z = " << z << ", y = " << y;
    throw NumericError(os.str(), k);
  }
  return k;
}

/// d kappa / dz = i sgn(Im z) d/dz[z m].
inline cplx d_kappa(cplx z, double y) { return kI * sgn_im(z) * d_zm(z, y); }

}  // namespace hht
