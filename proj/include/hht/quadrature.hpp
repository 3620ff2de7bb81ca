// SPDX-License-Identifier: Apache-2.0
//
// Double-exponential quadrature for complex- or real-valued integrands.
//
//   integrate_halfline  exp-sinh rule on (0, inf); absorbs algebraic endpoint
//                       singularities at 0 and exponential or algebraic decay
//   integrate_quadrant  nested halfline rules on (0, inf)^2
//   integrate_interval  tanh-sinh rule on a finite interval
//   cauchy_derivative   trapezoidal rule on a circle for f'(z0)
//
// Every rule refines by halving the step and reuses earlier nodes. The error
// estimate is the difference of the last two levels (plus a tail term for the
// half line), which over-estimates the error of the returned level because
// the schemes converge roughly quadratically in the number of levels.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <type_traits>

#include "hht/errors.hpp"
#include "hht/special.hpp"

namespace hht {

struct QuadratureConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-15;
  int max_refinements = 12;
  double tail_cut_factor = 40.0;

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
      throw ValidationError("quadrature tolerances must be positive");
    if (max_refinements < 1) throw ValidationError("max_refinements must be >= 1");
    if (!(tail_cut_factor > 0.0)) throw ValidationError("tail_cut_factor must be positive");
  }
};

template <class T>
struct QuadResult {
  T value{};
  double err_est = 0.0;
  int levels = 0;
  std::size_t evaluations = 0;
};

namespace detail {

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(cplx v) { return std::abs(v); }
inline bool finite(double v) { return std::isfinite(v); }
inline bool finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }
inline cplx as_complex(double v) { return {v, 0.0}; }
inline cplx as_complex(cplx v) { return v; }

/// Integrand value carrying a non-negative error that is integrated with the
/// same nodes and weights; convergence is judged on the value alone.
template <class T>
struct Tracked {
  T v{};
  double e = 0.0;
  Tracked& operator+=(const Tracked& o) {
    v += o.v;
    e += o.e;
    return *this;
  }
  friend Tracked operator-(const Tracked& a, const Tracked& b) { return {a.v - b.v, a.e - b.e}; }
  friend Tracked operator*(const Tracked& a, double w) { return {a.v * w, a.e * w}; }
};
template <class T>
double magnitude(const Tracked<T>& t) {
  return magnitude(t.v);
}
template <class T>
bool finite(const Tracked<T>& t) {
  return finite(t.v) && std::isfinite(t.e);
}
template <class T>
cplx as_complex(const Tracked<T>& t) {
  return as_complex(t.v);
}

inline constexpr double kHalfPi = 0.5 * std::numbers::pi;
inline constexpr int kMinLevels = 3;

[[noreturn]] inline void non_finite(const char* where, double x) {
  std::ostringstream os;
  os << where << ": integrand is not finite at x = " << x;
  throw NumericError(os.str());
}

/// Trapezoidal refinement on a fixed u-window [u_lo, u_hi].
/// `term(u)` returns the transformed integrand (weight included).
template <class T, class Term>
QuadResult<T> refine_trapezoid(Term&& term, double u_lo, double u_hi, double h0,
                               const QuadratureConfig& cfg, const char* name, double extra_err) {
  QuadResult<T> res;
  T sum{};
  std::size_t evals = 0;
  {
    const auto k_lo = static_cast<long>(std::ceil(u_lo / h0));
    const auto k_hi = static_cast<long>(std::floor(u_hi / h0));
    for (long k = k_lo; k <= k_hi; ++k) {
      sum += term(static_cast<double>(k) * h0);
      ++evals;
    }
  }
  double h = h0;
  T estimate = sum * h;
  double err = INFINITY;
  int level = 0;
  for (level = 1; level <= cfg.max_refinements; ++level) {
    h *= 0.5;
    // odd multiples of the new step
    const auto k_lo = static_cast<long>(std::ceil((u_lo / h - 1.0) / 2.0));
    const auto k_hi = static_cast<long>(std::floor((u_hi / h - 1.0) / 2.0));
    for (long k = k_lo; k <= k_hi; ++k) {
      sum += term(static_cast<double>(2 * k + 1) * h);
      ++evals;
    }
    const T next = sum * h;
    err = magnitude(next - estimate) + extra_err;
    estimate = next;
    const double target = std::max(cfg.abs_tol, cfg.rel_tol * magnitude(estimate));
    if (level >= kMinLevels && err <= target) break;
  }
  res.value = estimate;
  res.err_est = err;
  res.levels = std::min(level, cfg.max_refinements);
  res.evaluations = evals;
  if (!(err <= std::max(cfg.abs_tol, cfg.rel_tol * magnitude(estimate)))) {
    std::ostringstream os;
    os << name << ": refinement budget exhausted (err_est = " << err << ", value = " << as_complex(estimate)
       << ")";
    throw NumericError(os.str(), as_complex(estimate), err);
  }
  return res;
}

}  // namespace detail

/// Integral of f over (0, inf).
///
/// `decay_rate` > 0 declares |f(x)| <~ exp(-decay_rate x) for large x; the
/// range is then cut at tail_cut_factor / decay_rate and the integrand value
/// there, divided by decay_rate, is added to the error estimate. A zero
/// decay rate declares algebraic decay faster than 1/x and integrates out to
/// 1e100 times the natural scale.
///
/// `singularity_exponent` s in (-1, 0] declares |f(x)| <~ x^s near zero and
/// sets how close to zero the rule samples.
template <class F>
auto integrate_halfline(F&& f, double decay_rate, double singularity_exponent,
                        const QuadratureConfig& cfg = {})
    -> QuadResult<std::decay_t<decltype(f(1.0))>> {
  using T = std::decay_t<decltype(f(1.0))>;
  cfg.validate();
  if (decay_rate < 0.0) throw ValidationError("decay_rate must be non-negative");
  if (!(singularity_exponent > -1.0) || singularity_exponent > 0.0)
    throw ValidationError("singularity_exponent must lie in (-1, 0]");

  const double scale = decay_rate > 0.0 ? 1.0 / decay_rate : 1.0;
  // lower window: x^(1+s) below ~1e-20 relative to the bulk
  const double log_lo = std::min(575.0, 46.0 / (1.0 + singularity_exponent));
  const double log_hi =
      decay_rate > 0.0 ? std::log(cfg.tail_cut_factor) : std::log(1e100);
  const double u_lo = -std::asinh(log_lo / detail::kHalfPi);
  const double u_hi = std::asinh(std::max(log_hi, 0.5) / detail::kHalfPi);
  const double x_max = scale * std::exp(detail::kHalfPi * std::sinh(u_hi));

  const T f_end = f(x_max);
  if (!detail::finite(f_end)) detail::non_finite("integrate_halfline", x_max);
  const double tail = decay_rate > 0.0 ? detail::magnitude(f_end) / decay_rate
                                       : 4.0 * x_max * detail::magnitude(f_end);

  auto term = [&](double u) -> T {
    const double x = scale * std::exp(detail::kHalfPi * std::sinh(u));
    const double w = x * detail::kHalfPi * std::cosh(u);
    if (x == 0.0 || w == 0.0) return T{};
    const T v = f(x);
    if (!detail::finite(v)) detail::non_finite("integrate_halfline", x);
    return v * w;
  };
  return detail::refine_trapezoid<T>(term, u_lo, u_hi, 1.0, cfg, "integrate_halfline", tail);
}

/// Integral of f over [a, b] (tanh-sinh). f may have integrable algebraic
/// singularities at either endpoint; it is never evaluated at the endpoints.
template <class F>
auto integrate_interval(F&& f, double a, double b, const QuadratureConfig& cfg = {})
    -> QuadResult<std::decay_t<decltype(f(a))>> {
  using T = std::decay_t<decltype(f(a))>;
  cfg.validate();
  if (!(b > a)) {
    if (a == b) return {};
    throw ValidationError("integrate_interval requires a <= b");
  }
  const double half = 0.5 * (b - a);
  auto term = [&](double u) -> T {
    const double q = detail::kHalfPi * std::sinh(u);
    const double ch = std::cosh(q);
    // distance to the nearer endpoint, computed without cancellation
    const double delta = half * 2.0 / (1.0 + std::exp(2.0 * std::abs(q)));
    const double x = u < 0.0 ? a + delta : b - delta;
    const double w = half * detail::kHalfPi * std::cosh(u) / (ch * ch);
    if (w == 0.0 || delta == 0.0 || x == a || x == b) return T{};
    const T v = f(x);
    if (!detail::finite(v)) detail::non_finite("integrate_interval", x);
    return v * w;
  };
  // beyond |u| = 5 the nodes sit within ~1e-100 (b - a) of the endpoints;
  // the edge terms bound what the window leaves out
  constexpr double kWindow = 5.0;
  const double edge = 0.5 * (detail::magnitude(term(-kWindow)) + detail::magnitude(term(kWindow)));
  return detail::refine_trapezoid<T>(term, -kWindow, kWindow, 0.5, cfg, "integrate_interval", edge);
}

/// Integral of f(t, s) over (0, inf)^2 as an outer half-line integral of inner
/// half-line integrals. The inner rule runs at a tolerance ten times tighter
/// than the outer one; the reported error adds the outer estimate and the
/// outer integral of the inner estimates.
template <class F>
auto integrate_quadrant(F&& f, std::array<double, 2> decay_rates,
                        std::array<double, 2> singularity_exponents,
                        const QuadratureConfig& cfg = {})
    -> QuadResult<std::decay_t<decltype(f(1.0, 1.0))>> {
  using T = std::decay_t<decltype(f(1.0, 1.0))>;
  cfg.validate();
  QuadratureConfig inner_cfg = cfg;
  inner_cfg.rel_tol = cfg.rel_tol * 0.1;
  inner_cfg.abs_tol = cfg.abs_tol * 0.1;
  std::size_t evals = 0;
  auto outer = [&](double t) -> detail::Tracked<T> {
    auto r = integrate_halfline([&](double s) { return f(t, s); }, decay_rates[1],
                                singularity_exponents[1], inner_cfg);
    evals += r.evaluations;
    return {r.value, r.err_est};
  };
  const auto tr = integrate_halfline(outer, decay_rates[0], singularity_exponents[0], cfg);
  QuadResult<T> res;
  res.value = tr.value.v;
  res.err_est = tr.err_est + std::abs(tr.value.e);
  res.levels = tr.levels;
  res.evaluations = evals;
  return res;
}

/// f'(z0) from the Cauchy integral on the circle |z - z0| = radius.
/// The circle must stay off the real axis (radius < |Im z0|).
template <class F>
cplx cauchy_derivative(F&& f, cplx z0, double radius, int nodes = 64) {
  if (!(radius > 0.0)) throw DomainError("cauchy_derivative: radius must be positive");
  if (radius >= std::abs(z0.imag()))
    throw DomainError("cauchy_derivative: circle would cross the real axis");
  if (nodes < 4) throw ValidationError("cauchy_derivative: need at least 4 nodes");
  cplx acc{0.0, 0.0};
  const double step = 2.0 * std::numbers::pi / nodes;
  for (int k = 0; k < nodes; ++k) {
    const double theta = step * k;
    const cplx e = std::polar(1.0, theta);
    acc += cplx(f(z0 + radius * e)) * std::conj(e);
  }
  return acc / (static_cast<double>(nodes) * radius);
}

}  // namespace hht
