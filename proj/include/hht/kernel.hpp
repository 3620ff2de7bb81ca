// SPDX-License-Identifier: Apache-2.0
//
// Limiting covariance kernel C(z, w) of the centred resolvent traces
// theta_N(z) = N^{-(1 - alpha/4)} (Tr G(z) - E Tr G(z)), and its overlapping
// version C_ij(z, w), evaluated three ways:
//
//   route A  double integral over (t, s) of the mixed derivative of L
//   route B  one-dimensional r-integral after separating (z, t) from (w, s)
//   route C  closed form of the r-integral
//
// Both kernels are handled by one "side" abstraction. A side at z carries
// the slope kappa(z) of K(z, t) = t kappa(z), the weight p in the damping
// factor exp(-p K), and h(z) = s(z) / (1 - p s(z)), where s is the limiting
// resolvent diagonal. The single-matrix kernel is the side with p = y, q = 1
// and prefactor y; a submatrix with row and column fractions (p, q) has
// s(z) = m_{p/q}(z/q) / q and the pair of sides carries prefactor gamma_ij.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "hht/errors.hpp"
#include "hht/heavytail.hpp"
#include "hht/mplaw.hpp"
#include "hht/quadrature.hpp"
#include "hht/special.hpp"

namespace hht {

struct KernelParams {
  double alpha = 3.0;
  double c = 0.0;
  double y = 1.0;

  static KernelParams from(const HeavyTailSpec& dist, double y) {
    KernelParams k{dist.alpha, dist.c, y};
    k.validate();
    return k;
  }

  void validate() const {
    if (!(alpha > 2.0 && alpha < 4.0)) throw ValidationError("kernel: alpha must lie in (2, 4)");
    if (!(c > 0.0)) throw ValidationError("kernel: tail constant c must be positive");
    if (!(y > 0.0)) throw ValidationError("kernel: y must be positive");
  }

  double half_alpha() const { return 0.5 * alpha; }
};

struct OverlapParams {
  double p_i = 1.0;
  double p_j = 1.0;
  double q_i = 1.0;
  double q_j = 1.0;
  double gamma_ij = 1.0;

  void validate() const {
    if (!(p_i > 0.0 && p_j > 0.0 && q_i > 0.0 && q_j > 0.0))
      throw ValidationError("overlap: fractions p and q must be positive");
    if (!(gamma_ij > 0.0)) throw ValidationError("overlap: gamma_ij must be positive");
    if (gamma_ij > std::min(p_i, p_j) * std::min(q_i, q_j) + 1e-12)
      throw ValidationError("overlap: gamma_ij exceeds the overlap rectangle");
  }
};

struct KernelValue {
  cplx value;
  double err_est = 0.0;
};

/// One argument of the kernel with everything the three routes need.
struct KernelSide {
  cplx z;
  double sgn = 1.0;    ///< sign of Im z
  double weight = 1.0; ///< p in exp(-p K)
  cplx zs;             ///< z s(z)
  cplx kappa;          ///< i sgn z s(z)
  cplx d_kappa;        ///< d kappa / dz
  cplx h;              ///< s / (1 - p s) = (z s - 1) / q
  cplx d_h;            ///< dh / dz
};

/// Side of a submatrix with row fraction p and column fraction q.
inline KernelSide make_side(cplx z, double p, double q) {
  require_nonreal(z, "kernel");
  if (!(p > 0.0 && q > 0.0)) throw ValidationError("kernel side: p and q must be positive");
  const double ratio = p / q;
  const cplx zeta = z / q;
  KernelSide side;
  side.z = z;
  side.sgn = sgn_im(z);
  side.weight = p;
  side.zs = zeta * mp_stieltjes(zeta, ratio);
  if (!(side.zs.imag() * side.sgn < 0.0)) {
    std::ostringstream os;
    os << "kernel: Im(z s(z)) sgn(Im z) >= 0 at z = " << z;
    throw NumericError(os.str(), side.zs);
  }
  side.kappa = kI * side.sgn * side.zs;
  if (!(side.kappa.real() > 0.0)) {
    std::ostringstream os;
    os << "kernel: Re kappa <= 0 at z = " << z;
    throw NumericError(os.str(), side.kappa);
  }
  const cplx dzs = d_zm(zeta, ratio) / q;
  side.d_kappa = kI * side.sgn * dzs;
  side.h = (side.zs - 1.0) / q;
  side.d_h = dzs / q;
  return side;
}

inline KernelSide make_side(cplx z, const KernelParams& kp) { return make_side(z, kp.y, 1.0); }

namespace detail {

/// Phi = (K1 + K2)^a - K1^a - K2^a without cancellation when one argument
/// dominates.
inline cplx power_difference(cplx k1, cplx k2, double a) {
  const bool first_big = std::abs(k1) >= std::abs(k2);
  const cplx big = first_big ? k1 : k2;
  const cplx small = first_big ? k2 : k1;
  return ppow(big, a) * pow1p_m1(small / big, a) - ppow(small, a);
}

/// a [ (K1 + K2)^(a-1) - K1^(a-1) ].
inline cplx power_difference_d1(cplx k1, cplx k2, double a) {
  return a * ppow(k1, a - 1.0) * pow1p_m1(k2 / k1, a - 1.0);
}

inline void require_positive(double t, const char* what) {
  if (!(t > 0.0)) {
    std::ostringstream os;
    os << "kernel integrand: " << what << " must be positive";
    throw DomainError(os.str());
  }
}

/// L(z, t, w, s) for a pair of sides with a common prefactor.
inline cplx integrand_L(const KernelSide& zs, double t, const KernelSide& ws, double s, double pref,
                        double c, double a) {
  const cplx k1 = t * zs.kappa;
  const cplx k2 = s * ws.kappa;
  const cplx ex = kI * zs.sgn * t * zs.z + kI * ws.sgn * s * ws.z - zs.weight * k1 - ws.weight * k2;
  return pref * c * std::exp(ex) * power_difference(k1, k2, a) / (t * s);
}

/// d/dz d/dw L(z, t, w, s), by the product rule.
inline cplx integrand_mixed(const KernelSide& zs, double t, const KernelSide& ws, double s,
                            double pref, double c, double a) {
  const cplx k1 = t * zs.kappa;
  const cplx k2 = s * ws.kappa;
  const cplx d1 = t * zs.d_kappa;
  const cplx d2 = s * ws.d_kappa;
  const cplx e1 = kI * zs.sgn * t - zs.weight * d1;
  const cplx e2 = kI * ws.sgn * s - ws.weight * d2;
  const cplx ex = kI * zs.sgn * t * zs.z + kI * ws.sgn * s * ws.z - zs.weight * k1 - ws.weight * k2;
  const cplx phi = power_difference(k1, k2, a);
  const cplx phi1 = power_difference_d1(k1, k2, a);
  const cplx phi2 = power_difference_d1(k2, k1, a);
  const cplx phi12 = a * (a - 1.0) * ppow(k1 + k2, a - 2.0);
  const cplx bracket = e1 * e2 * phi + e1 * phi2 * d2 + e2 * phi1 * d1 + phi12 * d1 * d2;
  return pref * c * std::exp(ex) * bracket / (t * s);
}

inline KernelValue route_A(const KernelSide& zs, const KernelSide& ws, double pref, double c,
                           double a, const QuadratureConfig& cfg) {
  auto f = [&](double t, double s) { return integrand_mixed(zs, t, ws, s, pref, c, a); };
  const double rate_t = std::abs(zs.z.imag()) + zs.weight * zs.kappa.real();
  const double rate_s = std::abs(ws.z.imag()) + ws.weight * ws.kappa.real();
  const auto r = integrate_quadrant(f, {rate_t, rate_s}, {a - 2.0, a - 2.0}, cfg);
  return {r.value, r.err_est};
}

/// r^(1-a) / ((1 - r A)(1 - r B)), written in 1/r for r > 1.
inline cplx r_integrand(double r, cplx A, cplx B, double a) {
  if (r <= 1.0) return std::pow(r, 1.0 - a) / ((1.0 - r * A) * (1.0 - r * B));
  const double u = 1.0 / r;
  return std::pow(r, -1.0 - a) / ((u - A) * (u - B));
}

inline KernelValue route_B(const KernelSide& zs, const KernelSide& ws, double pref, double c,
                           double a, const QuadratureConfig& cfg) {
  auto f = [&](double r) { return r_integrand(r, zs.h, ws.h, a); };
  const auto res = integrate_halfline(f, 0.0, 1.0 - a, cfg);
  const cplx factor = pref * c / gamma_fn(-a) * zs.d_h * ws.d_h;
  return {factor * res.value, std::abs(factor) * res.err_est};
}

/// [(-u)^(a-1) - (-v)^(a-1)] / (u - v), with a Taylor expansion about u when
/// |u - v| < 1e-6.
inline cplx power_quotient(cplx u, cplx v, double a) {
  const double b = a - 1.0;
  const cplx d = v - u;
  if (std::abs(d) < 1e-6) {
    const cplx f1 = -b * ppow(-u, b - 1.0);
    const cplx f2 = b * (b - 1.0) * ppow(-u, b - 2.0);
    return f1 + 0.5 * f2 * d;
  }
  return (ppow(-u, b) - ppow(-v, b)) / (u - v);
}

inline cplx route_C(const KernelSide& zs, const KernelSide& ws, double pref, double c, double a) {
  return -pref * c * gamma_fn(1.0 + a) * zs.d_h * ws.d_h * power_quotient(zs.h, ws.h, a);
}

}  // namespace detail

/// Default rules for the two quadrature routes.
inline QuadratureConfig route_A_config() { return {1e-6, 1e-14, 9, 40.0}; }
inline QuadratureConfig route_B_config() { return {1e-12, 1e-300, 12, 40.0}; }

inline cplx kernel_integrand_L(cplx z, double t, cplx w, double s, const KernelParams& kp) {
  kp.validate();
  detail::require_positive(t, "t");
  detail::require_positive(s, "s");
  return detail::integrand_L(make_side(z, kp), t, make_side(w, kp), s, kp.y, kp.c, kp.half_alpha());
}

inline cplx kernel_integrand_mixed(cplx z, double t, cplx w, double s, const KernelParams& kp) {
  kp.validate();
  detail::require_positive(t, "t");
  detail::require_positive(s, "s");
  return detail::integrand_mixed(make_side(z, kp), t, make_side(w, kp), s, kp.y, kp.c,
                                 kp.half_alpha());
}

inline KernelValue kernel_route_A_double_integral(cplx z, cplx w, const KernelParams& kp,
                                                  const QuadratureConfig& cfg = route_A_config()) {
  kp.validate();
  return detail::route_A(make_side(z, kp), make_side(w, kp), kp.y, kp.c, kp.half_alpha(), cfg);
}

inline KernelValue kernel_route_B_r_integral(cplx z, cplx w, const KernelParams& kp,
                                             const QuadratureConfig& cfg = route_B_config()) {
  kp.validate();
  return detail::route_B(make_side(z, kp), make_side(w, kp), kp.y, kp.c, kp.half_alpha(), cfg);
}

inline cplx kernel_route_C_closed_form(cplx z, cplx w, const KernelParams& kp) {
  kp.validate();
  return detail::route_C(make_side(z, kp), make_side(w, kp), kp.y, kp.c, kp.half_alpha());
}

/// Limit of E[theta(z) conj(theta(w))] = C(z, conj w).
inline cplx kernel_covariance(cplx z, cplx w, const KernelParams& kp) {
  return kernel_route_C_closed_form(z, std::conj(w), kp);
}

/// s^[i](z) = m_{p/q}(z/q) / q, the limit of the resolvent diagonal of a
/// submatrix with row fraction p and column fraction q.
inline cplx overlap_s_i(cplx z, double p, double q) {
  require_nonreal(z, "overlap_s_i");
  if (!(p > 0.0 && q > 0.0)) throw ValidationError("overlap_s_i: p and q must be positive");
  const cplx s = mp_stieltjes(z / q, p / q) / q;
  const cplx k = kI * sgn_im(z) * z * s;
  if (!(k.real() > 0.0)) throw NumericError("overlap_s_i: Re K^[i] <= 0", k);
  return s;
}

/// C_ij(z, w) by the separated r-integral.
inline KernelValue overlap_kernel(cplx z, cplx w, const KernelParams& kp, const OverlapParams& op,
                                  const QuadratureConfig& cfg = route_B_config()) {
  kp.validate();
  op.validate();
  return detail::route_B(make_side(z, op.p_i, op.q_i), make_side(w, op.p_j, op.q_j), op.gamma_ij,
                         kp.c, kp.half_alpha(), cfg);
}

/// C_ij(z, w) by direct (t, s) quadrature of the mixed derivative.
inline KernelValue overlap_kernel_double_integral(cplx z, cplx w, const KernelParams& kp,
                                                  const OverlapParams& op,
                                                  const QuadratureConfig& cfg = route_A_config()) {
  kp.validate();
  op.validate();
  return detail::route_A(make_side(z, op.p_i, op.q_i), make_side(w, op.p_j, op.q_j), op.gamma_ij,
                         kp.c, kp.half_alpha(), cfg);
}

/// C_ij(z, w) in closed form (same r-integral evaluated analytically).
inline cplx overlap_kernel_closed_form(cplx z, cplx w, const KernelParams& kp,
                                       const OverlapParams& op) {
  kp.validate();
  op.validate();
  return detail::route_C(make_side(z, op.p_i, op.q_i), make_side(w, op.p_j, op.q_j), op.gamma_ij,
                         kp.c, kp.half_alpha());
}

// ---------------------------------------------------------------------------
// Intermediate identities of the separation.

/// int_0^inf (e^{-r K(z,t)} - 1) e^{i sgn_z t z - y K(z,t)} / t dt by quadrature.
inline KernelValue frullani_k_integral(cplx z, double r, double y,
                                       const QuadratureConfig& cfg = route_B_config()) {
  const auto side = make_side(z, y, 1.0);
  auto f = [&](double t) -> cplx {
    const cplx k = t * side.kappa;
    return expm1(-r * k) * std::exp(kI * side.sgn * t * z - y * k) / t;
  };
  const double rate = std::abs(z.imag()) + y * side.kappa.real();
  const auto res = integrate_halfline(f, rate, 0.0, cfg);
  return {res.value, res.err_est};
}

/// -log(1 - r (z m - 1)).
inline cplx frullani_k_closed(cplx z, double r, double y) {
  return -std::log(1.0 - r * (z * mp_stieltjes(z, y) - 1.0));
}

/// |(1 - r m / (1 - y m)) - (1 - r (z m - 1))|.
inline double frullani_simplification_defect(cplx z, double r, double y) {
  const cplx m = mp_stieltjes(z, y);
  return std::abs((1.0 - r * m / (1.0 - y * m)) - (1.0 - r * (z * m - 1.0)));
}

// ---------------------------------------------------------------------------
// Closed-form integrals behind the separation, checked by quadrature.

struct LemmaCheck {
  std::string lemma;
  std::string label;
  cplx quadrature;
  cplx closed_form;
  double rel_error = 0.0;
  bool pass = false;
};

struct LemmaReport {
  std::vector<LemmaCheck> checks;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

/// int_0^inf (e^{r sigma} - r sigma - 1) / r^(a+1) dr  vs  (-sigma)^a Gamma(-a), Re sigma < 0.
inline LemmaCheck check_power_integral(cplx sigma, double alpha, const QuadratureConfig& cfg) {
  if (!(sigma.real() < 0.0)) throw DomainError("power integral: Re sigma must be negative");
  const double a = 0.5 * alpha;
  auto f = [&](double r) { return exp_m1_mx(r * sigma) / std::pow(r, a + 1.0); };
  const auto q = integrate_halfline(f, 0.0, 1.0 - a, cfg);
  LemmaCheck c;
  c.lemma = "raising_into_power";
  c.quadrature = q.value;
  c.closed_form = ppow(-sigma, a) * gamma_fn(-a);
  return c;
}

/// int_0^inf (e^{-s1 t} - e^{-s2 t}) / t dt  vs  -log(s1 / s2), Re s1, Re s2 > 0.
inline LemmaCheck check_frullani(cplx s1, cplx s2, const QuadratureConfig& cfg) {
  if (!(s1.real() > 0.0 && s2.real() > 0.0))
    throw DomainError("frullani: Re sigma must be positive");
  // factor out the slower exponential
  const bool first_slow = s1.real() <= s2.real();
  const cplx slow = first_slow ? s1 : s2;
  const cplx fast = first_slow ? s2 : s1;
  const double sign = first_slow ? 1.0 : -1.0;
  auto f = [&](double t) -> cplx {
    return -sign * std::exp(-slow * t) * expm1(-(fast - slow) * t) / t;
  };
  const auto q = integrate_halfline(f, slow.real(), 0.0, cfg);
  LemmaCheck c;
  c.lemma = "subtract";
  c.quadrature = q.value;
  c.closed_form = -std::log(s1 / s2);
  return c;
}

/// int_0^inf r^(a-1) / ((r - s1)(r - s2)) dr  vs its closed form, s1, s2 non-real.
inline LemmaCheck check_r_integral(cplx s1, cplx s2, double alpha, const QuadratureConfig& cfg) {
  if (s1.imag() == 0.0 || s2.imag() == 0.0) throw DomainError("r integral: sigma must be non-real");
  const double a = 0.5 * alpha;
  auto f = [&](double r) -> cplx {
    if (r <= 1.0) return std::pow(r, a - 1.0) / ((r - s1) * (r - s2));
    const double u = 1.0 / r;
    return std::pow(r, a - 3.0) / ((1.0 - s1 * u) * (1.0 - s2 * u));
  };
  const auto q = integrate_halfline(f, 0.0, 0.0, cfg);
  LemmaCheck c;
  c.lemma = "int_r";
  c.quadrature = q.value;
  c.closed_form = std::numbers::pi * (ppow(-s1, a) * s2 - ppow(-s2, a) * s1) /
                  (std::sin(std::numbers::pi * a) * s2 * s1 * (s2 - s1));
  return c;
}

namespace detail {

inline void grade(LemmaCheck& c, double tol) {
  const double scale = std::abs(c.closed_form);
  const double diff = std::abs(c.quadrature - c.closed_form);
  c.rel_error = scale > 0.0 ? diff / scale : diff;
  c.pass = c.rel_error <= tol;
}

inline std::string label_of(std::initializer_list<cplx> vals) {
  std::ostringstream os;
  bool first = true;
  for (const cplx v : vals) {
    if (!first) os << ' ';
    os << v;
    first = false;
  }
  return os.str();
}

}  // namespace detail

/// The ten-point panels for each of the three integrals.
inline std::vector<cplx> power_integral_panel() {
  return {{-1.0, 0.0}, {-2.0, 0.0}, {-0.5, 0.0}, {-1.0, 1.0}, {-1.0, -1.0},
          {-0.5, 2.0}, {-3.0, -0.5}, {-2.0, 3.0}, {-0.7, -1.5}, {-5.0, 0.2}};
}

inline std::vector<std::array<cplx, 2>> frullani_panel() {
  return {{{{1.0, 0.0}, {2.0, 0.0}}},   {{{1.0, 1.0}, {2.0, -1.0}}}, {{{0.5, 0.0}, {0.5, 0.0}}},
          {{{3.0, 2.0}, {0.2, 0.1}}},   {{{1.0, -3.0}, {1.0, 3.0}}}, {{{0.1, 0.0}, {10.0, 0.0}}},
          {{{2.0, 0.5}, {0.3, -0.2}}},  {{{1.0, 5.0}, {4.0, 0.0}}},  {{{0.8, -0.8}, {0.8, 0.8}}},
          {{{5.0, 1.0}, {1.0, -1.0}}}};
}

inline std::vector<std::array<cplx, 2>> r_integral_panel() {
  return {{{{0.0, 1.0}, {0.0, 2.0}}},   {{{1.0, 1.0}, {1.0, -1.0}}},  {{{-1.0, 0.5}, {2.0, 1.0}}},
          {{{0.0, -1.0}, {3.0, -2.0}}}, {{{-2.0, -1.0}, {-1.0, 1.0}}}, {{{0.5, 3.0}, {0.5, 0.5}}},
          {{{4.0, 1.0}, {-4.0, 1.0}}},  {{{0.1, 0.7}, {-0.3, -0.9}}}, {{{2.0, -2.0}, {0.0, 0.5}}},
          {{{-1.0, 4.0}, {1.0, -4.0}}}};
}

/// Evaluates every panel at 1e-8 relative tolerance without throwing.
inline LemmaReport evaluate_integral_lemmas(double alpha, const QuadratureConfig& cfg = route_B_config(),
                                            double tol = 1e-8) {
  if (!(alpha > 2.0 && alpha < 4.0)) throw ValidationError("alpha must lie in (2, 4)");
  LemmaReport rep;
  for (const cplx s : power_integral_panel()) {
    auto c = check_power_integral(s, alpha, cfg);
    c.label = detail::label_of({s});
    detail::grade(c, tol);
    rep.checks.push_back(c);
  }
  for (const auto& p : frullani_panel()) {
    auto c = check_frullani(p[0], p[1], cfg);
    c.label = detail::label_of({p[0], p[1]});
    detail::grade(c, tol);
    rep.checks.push_back(c);
  }
  for (const auto& p : r_integral_panel()) {
    auto c = check_r_integral(p[0], p[1], alpha, cfg);
    c.label = detail::label_of({p[0], p[1]});
    detail::grade(c, tol);
    rep.checks.push_back(c);
  }
  return rep;
}

/// As evaluate_integral_lemmas, but a failing check raises VerificationError
/// naming the integral.
inline LemmaReport verify_integral_lemmas(double alpha, const QuadratureConfig& cfg = route_B_config()) {
  auto rep = evaluate_integral_lemmas(alpha, cfg);
  for (const auto& c : rep.checks) {
    if (!c.pass) {
      std::ostringstream os;
      os << "integral identity " << c.lemma << " failed at " << c.label
         << ": rel error " << c.rel_error;
      throw VerificationError(os.str());
    }
  }
  return rep;
}

}  // namespace hht
