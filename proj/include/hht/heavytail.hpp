// SPDX-License-Identifier: Apache-2.0
//
// Symmetric two-sided Pareto law with unit variance: Z = S x_m U^(-1/alpha)
// with a fair random sign S. Its tail is P(|Z| > x) = x_m^alpha x^(-alpha)
// for x >= x_m, i.e. regularly varying with a constant slowly varying part
// and tail constant c = -Gamma(1 - alpha/2) x_m^alpha.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <vector>

#include "hht/errors.hpp"
#include "hht/quadrature.hpp"
#include "hht/rng.hpp"
#include "hht/special.hpp"

namespace hht {

struct HeavyTailSpec {
  double alpha = 3.0;
  double x_m = 0.0;  ///< Pareto scale fixed by unit variance
  double c = 0.0;    ///< tail constant
  std::uint64_t seed = 0;

  static HeavyTailSpec make(double alpha, std::uint64_t seed = 0) {
    if (!(alpha > 2.0 && alpha < 4.0))
      throw ValidationError("tail index alpha must lie in (2, 4)");
    HeavyTailSpec s;
    s.alpha = alpha;
    s.x_m = std::sqrt((alpha - 2.0) / alpha);
    s.c = -gamma_fn(1.0 - 0.5 * alpha) * std::pow(s.x_m, alpha);
    s.seed = seed;
    return s;
  }

  void validate() const {
    if (!(alpha > 2.0 && alpha < 4.0))
      throw ValidationError("tail index alpha must lie in (2, 4)");
    const auto ref = make(alpha, seed);
    if (std::abs(x_m - ref.x_m) > 1e-12 * ref.x_m || std::abs(c - ref.c) > 1e-12 * ref.c)
      throw ValidationError("x_m and c must follow from alpha (unit-variance normalization)");
  }

  /// P(|Z| > x).
  double tail(double x) const { return x <= x_m ? 1.0 : std::pow(x_m / x, alpha); }
};

/// Truncation x -> x 1{|x| < N^beta} - mu_N at a fixed width N.
struct TruncationSpec {
  double beta = 0.0;
  double epsilon = 0.0;
  double mu_N = 0.0;
  double sigma_N_sq = 1.0;
  std::size_t N = 1;

  double threshold() const { return std::pow(static_cast<double>(N), beta); }
};

/// Whether epsilon is small enough for the diagonalization estimate:
/// -1/2 + (2/alpha - alpha/8 - 1/2) + epsilon (4 - alpha)/2 < 1 - alpha/2.
inline bool epsilon_admissible(double alpha, double epsilon) {
  return epsilon > 0.0 &&
         -0.5 + (2.0 / alpha - alpha / 8.0 - 0.5) + epsilon * (4.0 - alpha) / 2.0 <
             1.0 - alpha / 2.0;
}

namespace detail {

/// E[|Z|^k 1{|Z| < X}] for the symmetric Pareto law.
inline double truncated_abs_moment(const HeavyTailSpec& spec, double k, double X) {
  if (X <= spec.x_m) return 0.0;
  const double a = spec.alpha;
  const double pref = a * std::pow(spec.x_m, a);
  if (std::abs(k - a) < 1e-12) return pref * std::log(X / spec.x_m);
  return pref * (std::pow(X, k - a) - std::pow(spec.x_m, k - a)) / (k - a);
}

}  // namespace detail

inline TruncationSpec make_truncation(const HeavyTailSpec& spec, double epsilon, std::size_t N) {
  spec.validate();
  if (N < 1) throw ValidationError("truncation width N must be >= 1");
  if (!epsilon_admissible(spec.alpha, epsilon)) {
    std::ostringstream os;
    os << "epsilon = " << epsilon << " is not admissible for alpha = " << spec.alpha;
    throw ValidationError(os.str());
  }
  TruncationSpec t;
  t.epsilon = epsilon;
  t.beta = 0.25 + 1.0 / spec.alpha + epsilon;
  t.N = N;
  // symmetric law: the truncated mean vanishes identically
  t.mu_N = 0.0;
  t.sigma_N_sq = detail::truncated_abs_moment(spec, 2.0, t.threshold()) - t.mu_N * t.mu_N;
  return t;
}

/// Fill `out` with draws number 0..out.size()-1 of stream `stream_id`.
inline void fill_samples(const HeavyTailSpec& spec, std::uint64_t stream_id, std::span<double> out) {
  const CounterStream stream(spec.seed, stream_id);
  const double inv_alpha = -1.0 / spec.alpha;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint64_t w = stream.word(i);
    const double u = CounterStream::open_unit(w);
    const double mag = spec.x_m * std::pow(u, inv_alpha);
    out[i] = (w & 1u) ? -mag : mag;
  }
}

inline std::vector<double> sample(const HeavyTailSpec& spec, std::size_t n, std::uint64_t stream_id) {
  if (n == 0) throw ValidationError("sample: empty request (n = 0)");
  spec.validate();
  std::vector<double> out(n);
  fill_samples(spec, stream_id, out);
  return out;
}

inline void truncate_center_inplace(std::span<double> values, const TruncationSpec& trunc) {
  const double X = trunc.threshold();
  for (double& v : values) v = (std::abs(v) < X ? v : 0.0) - trunc.mu_N;
}

inline std::vector<double> truncate_center(std::vector<double> values, std::size_t N,
                                           const TruncationSpec& trunc) {
  if (N < 1) throw ValidationError("truncate_center: N must be >= 1");
  if (N != trunc.N) throw ValidationError("truncate_center: N does not match the truncation spec");
  truncate_center_inplace(values, trunc);
  return values;
}

/// Moments of the truncated entry, with the ratios to their N-power envelopes.
/// Envelope exponents: mean beta(1-alpha), variance defect beta(2-alpha),
/// third moment beta(3-alpha)_+, fourth moment beta(4-alpha).
struct TruncatedMoments {
  double mu_N = 0.0;
  double sigma_N_sq = 1.0;
  double m3 = 0.0;
  double m4 = 0.0;
  double kappa_mu = 0.0;
  double kappa_var = 0.0;
  double kappa_m3 = 0.0;
  double kappa_m4 = 0.0;
};

inline TruncatedMoments truncated_moments(const HeavyTailSpec& spec, const TruncationSpec& trunc,
                                          std::size_t N) {
  spec.validate();
  if (N != trunc.N) throw ValidationError("truncated_moments: N does not match the truncation spec");
  const double X = trunc.threshold();
  const double n = static_cast<double>(N);
  const double b = trunc.beta;
  const double a = spec.alpha;
  TruncatedMoments m;
  m.mu_N = trunc.mu_N;
  m.sigma_N_sq = detail::truncated_abs_moment(spec, 2.0, X) - m.mu_N * m.mu_N;
  m.m3 = detail::truncated_abs_moment(spec, 3.0, X);
  m.m4 = detail::truncated_abs_moment(spec, 4.0, X);
  m.kappa_mu = std::abs(m.mu_N) / std::pow(n, b * (1.0 - a));
  m.kappa_var = std::abs(m.sigma_N_sq - 1.0) / std::pow(n, b * (2.0 - a));
  m.kappa_m3 = m.m3 / std::pow(n, b * std::max(3.0 - a, 0.0));
  m.kappa_m4 = m.m4 / std::pow(n, b * (4.0 - a));
  return m;
}

/// phi_N(lambda) = E exp(-i |x_hat|^2 lambda / N) and 1 - phi_N, the latter
/// computed directly so that small differences keep full relative accuracy.
struct PhiValue {
  cplx phi;
  cplx one_minus_phi;
  double err_est = 0.0;
};

inline PhiValue phi_N_detail(cplx lambda, const HeavyTailSpec& spec, const TruncationSpec& trunc,
                             std::size_t N, const QuadratureConfig& cfg = {1e-13, 1e-300, 14, 40.0}) {
  if (lambda.imag() > 0.0) throw DomainError("phi_N: Im(lambda) must be <= 0");
  spec.validate();
  if (N != trunc.N) throw ValidationError("phi_N: N does not match the truncation spec");
  if (lambda == cplx{0.0, 0.0}) return {{1.0, 0.0}, {0.0, 0.0}, 0.0};
  const double X = trunc.threshold();
  if (X <= spec.x_m) return {{1.0, 0.0}, {0.0, 0.0}, 0.0};
  const double a = spec.alpha;
  const double xm2 = spec.x_m * spec.x_m;
  const double n = static_cast<double>(N);
  // x = x_m e^v, so f(x) dx = alpha e^(-alpha v) dv
  auto integrand = [&](double v) -> cplx {
    const cplx w = -kI * lambda * (xm2 * std::exp(2.0 * v) / n);
    return -expm1(w) * (a * std::exp(-a * v));
  };
  // TODO: carry mu_N through the integrand once an asymmetric law is added
  auto r = integrate_interval(integrand, 0.0, std::log(X / spec.x_m), cfg);
  return {1.0 - r.value, r.value, r.err_est};
}

inline cplx phi_N(cplx lambda, const HeavyTailSpec& spec, const TruncationSpec& trunc, std::size_t N) {
  return phi_N_detail(lambda, spec, trunc, N).phi;
}

/// Two-term small-argument expansion 1 - i lambda s/N + c (i lambda s)^(alpha/2) / N^(alpha/2)
/// with s = sigma_N^2.
inline cplx phi_N_expansion(cplx lambda, const HeavyTailSpec& spec, double sigma_sq, std::size_t N) {
  const double n = static_cast<double>(N);
  const double h = 0.5 * spec.alpha;
  const cplx il = kI * lambda * sigma_sq;
  return 1.0 - il / n + spec.c * ppow(il, h) / std::pow(n, h);
}

/// |phi_N - expansion| and the same divided by N^(-alpha/2).
struct PhiResidual {
  double residual = 0.0;
  double scaled = 0.0;
  double scaled_err = 0.0;  ///< quadrature error in the scaled residual
};

inline PhiResidual phi_N_residual(cplx lambda, const HeavyTailSpec& spec, double epsilon, std::size_t N) {
  const auto trunc = make_truncation(spec, epsilon, N);
  const auto pv = phi_N_detail(lambda, spec, trunc, N);
  const double n = static_cast<double>(N);
  const double h = 0.5 * spec.alpha;
  const cplx il = kI * lambda * trunc.sigma_N_sq;
  const cplx one_minus_expansion = il / n - spec.c * ppow(il, h) / std::pow(n, h);
  const double res = std::abs(pv.one_minus_phi - one_minus_expansion);
  const double scale = std::pow(n, h);
  return {res, res * scale, pv.err_est * scale};
}

}  // namespace hht
