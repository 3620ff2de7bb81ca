#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "hht/quadrature.hpp"
#include "hht/verify.hpp"

using namespace hht;
using Catch::Approx;

TEST_CASE("half-line rule on classical integrals", "[quadrature]") {
  QuadratureConfig cfg{1e-12, 1e-300, 12, 40.0};
  auto r1 = integrate_halfline([](double x) { return std::exp(-x); }, 1.0, 0.0, cfg);
  CHECK(r1.value == Approx(1.0).epsilon(1e-11));
  auto r2 = integrate_halfline([](double x) { return std::exp(-x) / std::sqrt(x); }, 1.0, -0.5, cfg);
  CHECK(r2.value == Approx(std::sqrt(std::numbers::pi)).epsilon(1e-11));
  CHECK(r2.err_est < 1e-9);
  // algebraic decay, no exponential rate
  auto r3 = integrate_halfline([](double x) { return 1.0 / (1.0 + x * x); }, 0.0, 0.0, cfg);
  CHECK(r3.value == Approx(0.5 * std::numbers::pi).epsilon(1e-10));
  // complex oscillation
  auto r4 = integrate_halfline([](double x) { return std::exp(cplx{-1.0, 1.0} * x); }, 1.0, 0.0, cfg);
  CHECK(std::abs(r4.value - cplx{0.5, 0.5}) < 1e-11);
}

TEST_CASE("finite interval with endpoint singularities", "[quadrature]") {
  auto r = integrate_interval([](double x) { return x * x; }, 0.0, 1.0);
  CHECK(r.value == Approx(1.0 / 3.0).epsilon(1e-12));
  auto s = integrate_interval([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0);
  CHECK(s.value == Approx(2.0).epsilon(1e-10));
  CHECK(integrate_interval([](double) { return 1.0; }, 2.0, 2.0).value == 0.0);
  CHECK_THROWS_AS(integrate_interval([](double) { return 1.0; }, 1.0, 0.0), ValidationError);
}

TEST_CASE("quadrant rule tracks inner errors", "[quadrature]") {
  auto f = [](double t, double s) { return cplx{std::exp(-t - 2.0 * s), 0.0}; };
  auto r = integrate_quadrant(f, {1.0, 2.0}, {0.0, 0.0}, {1e-10, 1e-300, 10, 40.0});
  CHECK(std::abs(r.value - 0.5) < 1e-9);
  CHECK(r.err_est < 1e-8);
}

TEST_CASE("bad configs and non-finite integrands", "[quadrature]") {
  CHECK_THROWS_AS((QuadratureConfig{-1.0, 1e-15, 12, 40.0}.validate()), ValidationError);
  CHECK_THROWS_AS((QuadratureConfig{1e-10, -1.0, 12, 40.0}.validate()), ValidationError);
  CHECK_THROWS_AS(integrate_halfline([](double) { return 1.0; }, -1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(integrate_halfline([](double) { return 1.0; }, 1.0, -1.0), ValidationError);
  CHECK_THROWS_AS(integrate_halfline([](double) { return NAN; }, 1.0, 0.0), NumericError);
}

TEST_CASE("budget exhaustion reports the best estimate", "[quadrature]") {
  try {
    integrate_halfline([](double x) { return std::cos(40.0 * x) / (1.0 + x); }, 0.0, 0.0,
                       {1e-14, 1e-300, 3, 40.0});
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::isfinite(e.best_value().real()));
    CHECK(e.err_est() > 0.0);
  }
}

TEST_CASE("smoke integrals of the verify suite", "[quadrature]") {
  for (const auto& r : run_verify_suite(VerifyOptions{}, "quadrature")) {
    INFO(r.name << ' ' << r.detail);
    CHECK(r.pass);
  }
}
