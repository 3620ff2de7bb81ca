#include <catch_amalgamated.hpp>

#include "hht/mplaw.hpp"
#include "hht/verify.hpp"
#include "test_util.hpp"

using namespace hht;
using Catch::Approx;

TEST_CASE("Stieltjes transform solves the quadratic with the right sign", "[mplaw]") {
  for (double y : mp_test_ratios()) {
    for (cplx z : mp_test_grid()) {
      const cplx m = mp_stieltjes(z, y);
      CHECK(mp_quadratic_residual(z, y, m) <= 1e-12);
      CHECK(m.imag() * z.imag() < 0.0);
      // Herglotz symmetry
      CHECK(std::abs(mp_stieltjes(std::conj(z), y) - std::conj(m)) <= 1e-14 * std::abs(m));
    }
  }
}

TEST_CASE("companion law gives the same root", "[mplaw]") {
  for (double y : mp_test_ratios())
    for (cplx z : mp_test_grid())
      CHECK(std::abs(mp_stieltjes_companion(z, y) - mp_stieltjes(z, y)) <=
            1e-10 * std::abs(mp_stieltjes(z, y)));
}

TEST_CASE("large |z| behaves like 1/z", "[mplaw]") {
  for (double y : {0.5, 2.0}) {
    const cplx z{1e6, 1e6};
    CHECK(std::abs(z * mp_stieltjes(z, y) - 1.0) < 1e-5);
  }
}

TEST_CASE("d(zm)/dz matches a Cauchy derivative", "[mplaw]") {
  for (double y : mp_test_ratios()) {
    for (cplx z : {cplx{0.0, 2.0}, cplx{1.0, 0.5}, cplx{-1.0, -1.0}, cplx{3.0, 0.3}, cplx{0.2, -0.4}}) {
      const double rho = 0.25 * std::abs(z.imag());
      const cplx ref = hht_test::cauchy_derivative([&](cplx u) { return u * mp_stieltjes(u, y); }, z, rho);
      CHECK(std::abs(d_zm(z, y) - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
    }
  }
}

TEST_CASE("kappa has positive real part off the axis", "[mplaw]") {
  for (double y : mp_test_ratios())
    for (cplx z : mp_test_grid()) CHECK(kappa(z, y).real() > 0.0);
}

TEST_CASE("density, atom and CDF", "[mplaw]") {
  const auto mp = MPParams::make(0.5);
  CHECK(mp.a == Approx(std::pow(1.0 - std::sqrt(0.5), 2)));
  CHECK(mp.b == Approx(std::pow(1.0 + std::sqrt(0.5), 2)));
  CHECK(mp_cdf(mp.b - 1e-12, 0.5) == Approx(1.0).margin(1e-6));
  CHECK(mp_cdf(mp.a, 0.5) == 0.0);
  CHECK(MPParams::make(2.0).atom_mass() == Approx(0.5));
  CHECK(mp_cdf(0.01, 2.0) == Approx(0.5));
  CHECK(mp_cdf(100.0, 2.0) == 1.0);
  CHECK(mp_density(0.5 * (mp.a + mp.b), 0.5) > 0.0);
  CHECK(mp_density(mp.b + 1.0, 0.5) == 0.0);
  CHECK_THROWS_AS(mp_density(-1.0, 0.5), DomainError);
}

TEST_CASE("real z and bad ratios are rejected", "[mplaw]") {
  CHECK_THROWS_AS(mp_stieltjes(cplx{1.0, 0.0}, 0.5), DomainError);
  CHECK_THROWS_AS(mp_stieltjes(cplx{1.0, NAN}, 0.5), DomainError);
  CHECK_THROWS_AS(mp_stieltjes(cplx{1.0, 1.0}, 0.0), ValidationError);
}

TEST_CASE("verify families for the law pass", "[mplaw]") {
  VerifyOptions opt;
  for (const char* fam : {"mplaw", "stieltjes"})
    for (const auto& r : run_verify_suite(opt, fam)) {
      INFO(r.family << '/' << r.name << ' ' << r.detail);
      CHECK(r.pass);
    }
}
