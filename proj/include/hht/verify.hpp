// SPDX-License-Identifier: Apache-2.0
//
// Deterministic identity suite. Each family returns one record per check;
// the CLI's `verify` command and the acceptance driver both run it.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "hht/errors.hpp"
#include "hht/heavytail.hpp"
#include "hht/kernel.hpp"
#include "hht/mplaw.hpp"
#include "hht/quadrature.hpp"
#include "hht/rng.hpp"
#include "hht/spectral.hpp"

namespace hht {

struct CheckRecord {
  std::string family;
  std::string name;
  bool pass = false;
  double worst = 0.0;  ///< worst error (or margin) seen
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyOptions {
  QuadratureConfig quad = route_B_config();
  QuadratureConfig quad_2d = route_A_config();
  std::uint64_t seed = 1;
  std::size_t trials = 100;

  void validate() const {
    quad.validate();
    quad_2d.validate();
    if (trials < 1) throw ValidationError("verify: trials must be >= 1");
  }
};

namespace detail {

inline std::string fmt_z(cplx z) {
  std::ostringstream os;
  os << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << "i";
  return os.str();
}

inline CheckRecord record(std::string family, std::string name, double worst, double tol,
                          std::string detail = {}) {
  return {std::move(family), std::move(name), worst <= tol, worst, tol, std::move(detail)};
}

}  // namespace detail

/// 200 points with |Re z| <= 10 and 1e-2 <= |Im z| <= 10 (log-spaced in Im).
inline std::vector<cplx> mp_test_grid() {
  std::vector<cplx> g;
  for (int i = 0; i < 10; ++i) {
    const double re = -10.0 + 20.0 * i / 9.0;
    for (int j = 0; j < 10; ++j) {
      const double im = std::pow(10.0, -2.0 + 3.0 * j / 9.0);
      g.emplace_back(re, im);
      g.emplace_back(re, -im);
    }
  }
  return g;
}

inline const std::array<double, 4>& mp_test_ratios() {
  static const std::array<double, 4> ys{0.25, 0.5, 1.0, 2.0};
  return ys;
}

/// Quadratic residual, sign rule, companion cross-check and d(zm)/dz against
/// the Cauchy-integral derivative.
inline std::vector<CheckRecord> verify_mplaw(const VerifyOptions&) {
  double res = 0.0, sign_margin = -INFINITY, comp = 0.0, deriv = 0.0;
  std::string worst_deriv;
  for (const double y : mp_test_ratios()) {
    for (const cplx z : mp_test_grid()) {
      const cplx m = mp_stieltjes(z, y);
      res = std::max(res, mp_quadratic_residual(z, y, m));
      const double s = (z * m).imag() * sgn_im(z);
      sign_margin = std::max(sign_margin, s);  // must stay negative
      const cplx mc = mp_stieltjes_companion(z, y);
      comp = std::max(comp, std::abs(mc - m) / std::abs(m));
      const cplx d = d_zm(z, y);
      const cplx dn = cauchy_derivative([&](cplx u) { return u * mp_stieltjes(u, y); }, z,
                                        0.5 * std::abs(z.imag()), 64);
      const double rel = std::abs(d - dn) / std::abs(d);
      if (rel > deriv) {
        deriv = rel;
        worst_deriv = "y=" + std::to_string(y) + " z=" + detail::fmt_z(z);
      }
    }
  }
  std::vector<CheckRecord> out;
  out.push_back(detail::record("mplaw", "quadratic_residual", res, 1e-12));
  CheckRecord sr{"mplaw", "sign_im_zm", sign_margin < 0.0, sign_margin, 0.0,
                 "max of Im(zm) sgn(Im z); must be negative"};
  out.push_back(sr);
  out.push_back(detail::record("mplaw", "companion_crosscheck", comp, 1e-10));
  out.push_back(detail::record("mplaw", "d_zm_vs_cauchy", deriv, 1e-8, worst_deriv));
  return out;
}

/// Twenty points (five per ratio, including y = 2 with its atom).
inline std::vector<std::pair<double, cplx>> stieltjes_test_points() {
  std::vector<std::pair<double, cplx>> pts;
  const std::array<cplx, 5> zs{cplx{0.5, 1.0}, cplx{2.0, 0.5}, cplx{-1.0, 0.3}, cplx{1.0, -2.0},
                               cplx{5.0, -0.2}};
  for (const double y : mp_test_ratios())
    for (const cplx z : zs) pts.emplace_back(y, z);
  return pts;
}

/// m_y(z) against the quadrature of the density plus the atom.
inline cplx mp_stieltjes_by_quadrature(cplx z, double y, const QuadratureConfig& cfg) {
  const auto mp = MPParams::make(y);
  auto f = [&](double x) -> cplx {
    return std::sqrt((mp.b - x) * (x - mp.a)) / (2.0 * std::numbers::pi * x * y) / (z - x);
  };
  return integrate_interval(f, mp.a, mp.b, cfg).value + mp.atom_mass() / z;
}

inline std::vector<CheckRecord> verify_stieltjes(const VerifyOptions&) {
  double worst = 0.0;
  std::string where;
  for (const auto& [y, z] : stieltjes_test_points()) {
    const cplx q = mp_stieltjes_by_quadrature(z, y, {1e-12, 1e-15, 14, 40.0});
    const double e = std::abs(mp_stieltjes(z, y) - q);
    if (e > worst) {
      worst = e;
      where = "y=" + std::to_string(y) + " z=" + detail::fmt_z(z);
    }
  }
  return {detail::record("stieltjes", "density_quadrature", worst, 1e-6, where)};
}

inline std::vector<CheckRecord> verify_lemmas(const VerifyOptions& opt) {
  std::vector<CheckRecord> out;
  for (const double alpha : {2.5, 3.0, 3.5}) {
    const auto rep = evaluate_integral_lemmas(alpha, opt.quad);
    for (const char* lemma : {"raising_into_power", "subtract", "int_r"}) {
      double worst = 0.0;
      std::string where;
      for (const auto& c : rep.checks) {
        if (c.lemma != lemma) continue;
        if (c.rel_error > worst || where.empty()) {
          worst = std::max(worst, c.rel_error);
          where = c.label;
        }
      }
      std::ostringstream nm;
      nm << lemma << "_alpha" << alpha;
      out.push_back(detail::record("lemmas", nm.str(), worst, 1e-8, where));
    }
  }
  return out;
}

inline const std::array<cplx, 6>& frullani_points() {
  static const std::array<cplx, 6> zs{cplx{0.0, 2.0}, cplx{1.0, 1.0},  cplx{-1.0, 0.5},
                                      cplx{2.0, -1.0}, cplx{3.0, 0.2}, cplx{0.5, -3.0}};
  return zs;
}

inline std::vector<CheckRecord> verify_frullani(const VerifyOptions& opt) {
  const double y = 0.5;
  double worst = 0.0, simpl = 0.0;
  std::string where;
  for (const cplx z : frullani_points()) {
    for (const double r : {0.1, 1.0, 10.0}) {
      const cplx q = frullani_k_integral(z, r, y, opt.quad).value;
      const cplx c = frullani_k_closed(z, r, y);
      const double e = std::abs(q - c) / std::max(std::abs(c), 1e-300);
      if (e > worst) {
        worst = e;
        where = "z=" + detail::fmt_z(z) + " r=" + std::to_string(r);
      }
      simpl = std::max(simpl, frullani_simplification_defect(z, r, y));
    }
  }
  return {detail::record("frullani", "k_integral", worst, 1e-8, where),
          detail::record("frullani", "simplification", simpl, 1e-12)};
}

/// Twelve (z, w) pairs on both half planes.
inline std::vector<std::pair<cplx, cplx>> kernel_test_pairs() {
  return {{{0.0, 2.0}, {1.0, 2.0}},  {{0.0, 2.0}, {0.0, -2.0}}, {{1.0, 1.0}, {1.0, 1.0}},
          {{1.0, 1.0}, {-1.0, 1.0}}, {{2.0, 0.5}, {1.0, -1.0}}, {{0.5, -1.0}, {3.0, 2.0}},
          {{-2.0, 1.0}, {2.0, 1.0}}, {{1.5, 0.7}, {1.5, -0.7}}, {{0.0, 5.0}, {4.0, 3.0}},
          {{3.0, -1.5}, {0.2, -0.8}}, {{1.0, 0.3}, {2.5, 0.4}}, {{-0.5, -2.0}, {0.7, 1.2}}};
}

struct RouteAgreement {
  double worst_B = 0.0;
  double worst_A = 0.0;
  std::string where_B, where_A;
  std::size_t evaluations = 0;
};

inline RouteAgreement kernel_route_agreement(const VerifyOptions& opt) {
  RouteAgreement ra;
  for (const double alpha : {2.5, 3.0, 3.5}) {
    const auto dist = HeavyTailSpec::make(alpha);
    for (const double y : {0.5, 1.0, 2.0}) {
      const auto kp = KernelParams::from(dist, y);
      for (const auto& [z, w] : kernel_test_pairs()) {
        const cplx c = kernel_route_C_closed_form(z, w, kp);
        const cplx b = kernel_route_B_r_integral(z, w, kp, opt.quad).value;
        const cplx a = kernel_route_A_double_integral(z, w, kp, opt.quad_2d).value;
        const double eb = std::abs(b - c) / std::abs(c);
        const double ea = std::abs(a - c) / std::abs(c);
        std::ostringstream os;
        os << "alpha=" << alpha << " y=" << y << " z=" << detail::fmt_z(z)
           << " w=" << detail::fmt_z(w);
        if (eb >= ra.worst_B) {
          ra.worst_B = eb;
          ra.where_B = os.str();
        }
        if (ea >= ra.worst_A) {
          ra.worst_A = ea;
          ra.where_A = os.str();
        }
        ++ra.evaluations;
      }
    }
  }
  return ra;
}

inline std::vector<CheckRecord> verify_routes(const VerifyOptions& opt) {
  const auto ra = kernel_route_agreement(opt);
  return {detail::record("routes", "B_vs_C", ra.worst_B, 1e-8, ra.where_B),
          detail::record("routes", "A_vs_C", ra.worst_A, 1e-3, ra.where_A)};
}

/// Closed-form smoke integrals; each must hit its value within its own
/// error estimate (plus rounding) and within 1e-9 relative.
inline std::vector<CheckRecord> verify_quadrature(const VerifyOptions&) {
  struct Case {
    std::string name;
    std::function<QuadResult<cplx>()> run;
    cplx exact;
  };
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  const QuadratureConfig q{1e-12, 1e-300, 14, 40.0};
  auto half = [q](auto f, double decay, double sing) {
    return [=]() { return integrate_halfline([&](double x) { return cplx(f(x)); }, decay, sing, q); };
  };
  auto interval = [q](auto f, double a, double b) {
    return [=]() { return integrate_interval([&](double x) { return cplx(f(x)); }, a, b, q); };
  };
  std::vector<Case> cases;
  cases.push_back({"exp", half([](double t) { return std::exp(-t); }, 1.0, 0.0), 1.0});
  cases.push_back({"exp_rate3", half([](double t) { return std::exp(-3.0 * t); }, 3.0, 0.0), 1.0 / 3.0});
  cases.push_back({"rsqrt_exp", half([](double t) { return std::exp(-t) / std::sqrt(t); }, 1.0, -0.5), sqrt_pi});
  cases.push_back({"complex_decay",
                   half([](double t) { return std::exp(-cplx(1.0, 1.0) * t); }, 1.0, 0.0),
                   1.0 / cplx(1.0, 1.0)});
  cases.push_back({"t_exp", half([](double t) { return t * std::exp(-t); }, 1.0, 0.0), 1.0});
  cases.push_back({"t2_exp", half([](double t) { return t * t * std::exp(-t); }, 1.0, 0.0), 2.0});
  cases.push_back({"t_pow_m09", half([](double t) { return std::pow(t, -0.9) * std::exp(-t); }, 1.0, -0.9),
                   std::tgamma(0.1)});
  cases.push_back({"t_pow_m025", half([](double t) { return std::pow(t, -0.25) * std::exp(-2.0 * t); }, 2.0, -0.25),
                   std::tgamma(0.75) / std::pow(2.0, 0.75)});
  cases.push_back({"cos_exp", half([](double t) { return std::cos(t) * std::exp(-t); }, 1.0, 0.0), 0.5});
  cases.push_back({"sin_exp", half([](double t) { return std::sin(2.0 * t) * std::exp(-t); }, 1.0, 0.0), 0.4});
  cases.push_back({"lorentz", half([](double t) { return 1.0 / (1.0 + t * t); }, 0.0, 0.0),
                   0.5 * std::numbers::pi});
  cases.push_back({"algebraic3", half([](double t) { return 1.0 / ((1.0 + t) * (1.0 + t) * (1.0 + t)); }, 0.0, 0.0), 0.5});
  cases.push_back({"beta_half", half([](double t) { return 1.0 / (std::sqrt(t) * (1.0 + t)); }, 0.0, -0.5),
                   std::numbers::pi});
  cases.push_back({"gauss", half([](double t) { return std::exp(-t * t); }, 1.0, 0.0), 0.5 * sqrt_pi});
  cases.push_back({"log_exp", half([](double t) { return std::log(t) * std::exp(-t); }, 1.0, -0.01),
                   -std::numbers::egamma});
  cases.push_back({"poly01", interval([](double x) { return x * x; }, 0.0, 1.0), 1.0 / 3.0});
  cases.push_back({"sqrt_end", interval([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0), 2.0});
  cases.push_back({"semicircle", interval([](double x) { return std::sqrt(1.0 - x * x); }, -1.0, 1.0),
                   0.5 * std::numbers::pi});
  cases.push_back({"pow_m075", interval([](double x) { return std::pow(x, -0.75); }, 0.0, 1.0), 4.0});
  cases.push_back({"exp_interval", interval([](double x) { return std::exp(x); }, 0.0, 2.0),
                   std::exp(2.0) - 1.0});
  cases.push_back({"log_interval", interval([](double x) { return std::log(x); }, 0.0, 1.0), -1.0});
  cases.push_back({"complex_interval",
                   interval([](double x) { return 1.0 / cplx(x, 1.0); }, 0.0, 1.0),
                   std::log(cplx(1.0, 1.0)) - std::log(cplx(0.0, 1.0))});
  std::vector<CheckRecord> out;
  for (const auto& c : cases) {
    const auto r = c.run();
    const double err = std::abs(r.value - c.exact);
    const double rel = err / std::abs(c.exact);
    CheckRecord rec;
    rec.family = "quadrature";
    rec.name = c.name;
    rec.worst = rel;
    rec.tolerance = 1e-9;
    // the estimate bounds the error up to rounding of the sum
    const bool bounded = err <= r.err_est + 64.0 * 2.2e-16 * std::abs(c.exact);
    rec.pass = rel <= 1e-9 && bounded;
    std::ostringstream os;
    os << "err=" << err << " err_est=" << r.err_est;
    rec.detail = os.str();
    out.push_back(rec);
  }
  return out;
}

/// Grid used for the exact finite-N identities.
inline const std::array<cplx, 6>& identity_grid() {
  static const std::array<cplx, 6> g{cplx{0.0, 1.0}, cplx{0.0, -1.0}, cplx{1.0, 1.0},
                                     cplx{1.0, -1.0}, cplx{2.0, 0.5}, cplx{2.0, -0.5}};
  return g;
}

/// Random P x N heavy-tailed matrix with P, N in [1, 64] for trial `k`.
inline Matrix identity_trial_matrix(std::uint64_t seed, std::size_t k) {
  CounterEngine eng(seed, 0x1d000000ull + k);
  const auto P = static_cast<std::size_t>(1 + eng() % 64);
  const auto N = static_cast<std::size_t>(1 + eng() % 64);
  const auto dist = HeavyTailSpec::make(3.0, seed ^ 0x5eedull);
  const auto ens = EnsembleSpec::make(N, static_cast<double>(P) / static_cast<double>(N), dist, false);
  return build_matrix(ens, k);
}

struct IdentityTally {
  double ward = 0.0;
  std::size_t bound_fail = 0;
  std::size_t sign_fail = 0;
  double diag_identity = 0.0;
  std::size_t rank_fail = 0;
  double rank_worst_margin = -INFINITY;  ///< max of lhs - rhs
  std::size_t trials = 0;
};

inline IdentityTally run_identity_trials(const VerifyOptions& opt, bool ward, bool bound, bool sign,
                                         bool diag, bool rank) {
  IdentityTally t;
  const auto dist = HeavyTailSpec::make(3.0);
  for (std::size_t k = 0; k < opt.trials; ++k) {
    const Matrix X = identity_trial_matrix(opt.seed, k);
    const auto N = static_cast<std::size_t>(X.cols());
    ++t.trials;
    for (const cplx z : identity_grid()) {
      if (ward || bound || sign) {
        const CMatrix G = resolvent_entries(X, N, z);
        if (ward) t.ward = std::max(t.ward, ward_defect(G, z));
        if (bound && !diagonal_bound_holds(G, z)) ++t.bound_fail;
        if (sign && !(trace_sign_holds(G, z) && diagonal_sign_holds(G, z))) ++t.sign_fail;
      }
      if (diag) {
        for (const auto& d : check_diagonal_identity_all(X, N, z))
          t.diag_identity = std::max({t.diag_identity, d.unscaled.rel_error, d.scaled.rel_error});
      }
      if (rank) {
        const auto trunc = make_truncation(dist, 0.01, N);
        Matrix Xh = X;
        truncate_center_inplace(std::span<double>(Xh.data(), static_cast<std::size_t>(Xh.size())),
                                trunc);
        const auto rc = check_rank_inequality(X, Xh, z);
        if (!rc.holds) ++t.rank_fail;
        t.rank_worst_margin = std::max(t.rank_worst_margin, rc.lhs - rc.rhs);
      }
    }
  }
  return t;
}

inline std::vector<CheckRecord> verify_ward(const VerifyOptions& opt) {
  const auto t = run_identity_trials(opt, true, false, false, false, false);
  return {detail::record("ward", "ward_identity", t.ward, 1e-9,
                         std::to_string(t.trials) + " matrices")};
}

inline std::vector<CheckRecord> verify_diagonal_bound(const VerifyOptions& opt) {
  const auto t = run_identity_trials(opt, false, true, false, false, false);
  return {detail::record("diagonal_bound", "abs_G_ii_le_inv_im_z", static_cast<double>(t.bound_fail),
                         0.0, "violations")};
}

inline std::vector<CheckRecord> verify_sign(const VerifyOptions& opt) {
  const auto t = run_identity_trials(opt, false, false, true, false, false);
  return {detail::record("sign", "sgn_im_z_trace", static_cast<double>(t.sign_fail), 0.0,
                         "violations")};
}

inline std::vector<CheckRecord> verify_diagonal_identity(const VerifyOptions& opt) {
  const auto t = run_identity_trials(opt, false, false, false, true, false);
  return {detail::record("diagonal_identity", "schur_complement", t.diag_identity, 1e-8,
                         "unscaled and 1/sqrt(N)-scaled")};
}

inline std::vector<CheckRecord> verify_rank(const VerifyOptions& opt) {
  const auto t = run_identity_trials(opt, false, false, false, false, true);
  std::ostringstream os;
  os << "max lhs - rhs = " << t.rank_worst_margin;
  return {detail::record("rank", "rank_inequality_truncation", static_cast<double>(t.rank_fail),
                         0.0, os.str())};
}

struct VerifyFamily {
  std::string name;
  std::function<std::vector<CheckRecord>(const VerifyOptions&)> run;
};

inline const std::vector<VerifyFamily>& verify_families() {
  static const std::vector<VerifyFamily> fams{
      {"quadrature", verify_quadrature},
      {"mplaw", verify_mplaw},
      {"stieltjes", verify_stieltjes},
      {"lemmas", verify_lemmas},
      {"frullani", verify_frullani},
      {"routes", verify_routes},
      {"ward", verify_ward},
      {"diagonal_bound", verify_diagonal_bound},
      {"sign", verify_sign},
      {"diagonal_identity", verify_diagonal_identity},
      {"rank", verify_rank},
  };
  return fams;
}

/// Runs every family, or only `only` when non-empty.
inline std::vector<CheckRecord> run_verify_suite(const VerifyOptions& opt, const std::string& only = {}) {
  opt.validate();
  std::vector<CheckRecord> out;
  bool found = only.empty();
  for (const auto& f : verify_families()) {
    if (!only.empty() && f.name != only) continue;
    found = true;
    auto recs = f.run(opt);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  if (!found) throw ValidationError("verify: unknown family '" + only + "'");
  return out;
}

}  // namespace hht
