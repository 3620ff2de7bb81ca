#include <catch_amalgamated.hpp>

#include "hht/kernel.hpp"
#include "hht/verify.hpp"
#include "test_util.hpp"

using namespace hht;

namespace {

double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

KernelParams params(double alpha, double y) { return KernelParams::from(HeavyTailSpec::make(alpha), y); }

}  // namespace

TEST_CASE("three routes agree", "[kernel]") {
  const auto kp = params(3.0, 0.5);
  for (auto [z, w] : {std::pair{cplx{0.0, 2.0}, cplx{1.0, 2.0}}, std::pair{cplx{1.2, 0.7}, cplx{1.2, -0.7}},
                      std::pair{cplx{-1.0, -1.0}, cplx{2.0, 0.5}}}) {
    const cplx c = kernel_route_C_closed_form(z, w, kp);
    CHECK(rel(kernel_route_B_r_integral(z, w, kp).value, c) < 1e-8);
    CHECK(rel(kernel_route_A_double_integral(z, w, kp).value, c) < 1e-3);
  }
}

TEST_CASE("coincident points use the Taylor branch smoothly", "[kernel]") {
  const auto kp = params(3.0, 0.5);
  const cplx z{1.0, 1.0};
  const cplx at = kernel_route_C_closed_form(z, z, kp);
  const cplx near = kernel_route_C_closed_form(z, z + cplx{2e-6, 0.0}, kp);
  CHECK(rel(near, at) < 1e-4);
  CHECK(rel(kernel_route_B_r_integral(z, z, kp).value, at) < 1e-8);
}

TEST_CASE("kernel symmetries", "[kernel]") {
  for (double alpha : {2.5, 3.0, 3.5}) {
    for (double y : {0.5, 1.0, 2.0}) {
      const auto kp = params(alpha, y);
      for (const auto& [z, w] : kernel_test_pairs()) {
        const cplx c = kernel_route_C_closed_form(z, w, kp);
        CHECK(rel(kernel_route_C_closed_form(w, z, kp), c) < 1e-12);
        CHECK(rel(kernel_route_C_closed_form(std::conj(z), std::conj(w), kp), std::conj(c)) < 1e-12);
      }
      // E|theta(z)|^2 is real and positive
      for (cplx z : {cplx{0.0, 2.0}, cplx{1.2, 0.7}, cplx{-0.5, -1.5}}) {
        const cplx v = kernel_covariance(z, z, kp);
        CHECK(v.real() > 0.0);
        CHECK(std::abs(v.imag()) < 1e-12 * v.real());
      }
    }
  }
}

TEST_CASE("known value at one point", "[kernel]") {
  const auto kp = params(3.0, 0.5);
  const cplx v = kernel_covariance(cplx{1.2, 0.7}, cplx{1.2, 0.7}, kp);
  CHECK(v.real() == Catch::Approx(0.098).margin(0.001));
}

TEST_CASE("route A integrand is the mixed derivative of L", "[kernel]") {
  const auto kp = params(3.0, 0.5);
  for (auto [z, w] : {std::pair{cplx{0.0, 2.0}, cplx{1.0, 2.0}}, std::pair{cplx{1.0, -1.0}, cplx{0.5, 1.5}}}) {
    for (auto [t, s] : {std::pair{0.5, 1.5}, std::pair{2.0, 0.3}}) {
      // circles of radius |Im|/2 stay clear of the real axis
      const double rho = 0.5 * std::min(std::abs(z.imag()), std::abs(w.imag()));
      const cplx ref = hht_test::cauchy_mixed(
          [&](cplx a, cplx b) { return kernel_integrand_L(a, t, b, s, kp); }, z, w, rho, 48);
      CHECK(rel(kernel_integrand_mixed(z, t, w, s, kp), ref) < 1e-8);
    }
  }
  CHECK_THROWS_AS(kernel_integrand_L(cplx{0.0, 1.0}, 0.0, cplx{0.0, 1.0}, 1.0, kp), DomainError);
}

TEST_CASE("overlap kernel: full overlap, linearity in gamma, routes", "[kernel]") {
  for (double y : {0.5, 1.0, 2.0}) {
    const auto kp = params(3.0, y);
    const OverlapParams full{y, y, 1.0, 1.0, y};
    for (const auto& [z, w] : kernel_test_pairs())
      CHECK(rel(overlap_kernel_closed_form(z, w, kp, full), kernel_route_C_closed_form(z, w, kp)) < 1e-12);
  }
  const auto kp = params(3.0, 0.6);
  OverlapParams op{0.4, 0.4, 0.6, 0.6, 0.06};
  const cplx z{0.0, 2.0}, w{1.0, 2.0};
  const cplx c1 = overlap_kernel_closed_form(z, w, kp, op);
  op.gamma_ij = 0.12;
  CHECK(rel(overlap_kernel_closed_form(z, w, kp, op), 2.0 * c1) < 1e-14);
  CHECK(rel(overlap_kernel(z, w, kp, op).value, 2.0 * c1) < 1e-8);
  CHECK(rel(overlap_kernel_double_integral(z, w, kp, op).value, 2.0 * c1) < 1e-3);
  op.gamma_ij = 0.5;
  CHECK_THROWS_AS(op.validate(), ValidationError);
  // s_i reduces to m_y when p = y, q = 1
  CHECK(std::abs(overlap_s_i(z, 0.6, 1.0) - mp_stieltjes(z, 0.6)) < 1e-15);
}

TEST_CASE("integral lemmas and the Frullani identity", "[kernel]") {
  for (double alpha : {2.5, 3.0, 3.5}) {
    const auto rep = evaluate_integral_lemmas(alpha);
    for (const auto& c : rep.checks) {
      INFO(c.lemma << ' ' << c.label << " rel=" << c.rel_error);
      CHECK(c.pass);
    }
    CHECK_NOTHROW(verify_integral_lemmas(alpha));
  }
  for (cplx z : frullani_points())
    for (double r : {0.1, 1.0, 10.0}) {
      const cplx ref = frullani_k_closed(z, r, 0.5);
      CHECK(rel(frullani_k_integral(z, r, 0.5).value, ref) < 1e-8);
    }
}

TEST_CASE("kernel parameters are validated", "[kernel]") {
  auto kp = params(3.0, 0.5);
  kp.y = -1.0;
  CHECK_THROWS_AS(kernel_route_C_closed_form(cplx{0.0, 1.0}, cplx{0.0, 1.0}, kp), ValidationError);
  CHECK_THROWS_AS(kernel_route_C_closed_form(cplx{1.0, 0.0}, cplx{0.0, 1.0}, params(3.0, 0.5)), DomainError);
}
