#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hht/heavytail.hpp"

using namespace hht;
using Catch::Approx;

TEST_CASE("unit-variance Pareto constants", "[heavytail]") {
  const auto s = HeavyTailSpec::make(3.0);
  CHECK(s.x_m == Approx(0.577350).epsilon(1e-6));
  // 2 sqrt(pi) (1/3)^(3/2) = 0.6822178...
  CHECK(s.c == Approx(2.0 * std::sqrt(std::numbers::pi) * std::pow(1.0 / 3.0, 1.5)).epsilon(1e-14));
  CHECK(s.c == Approx(0.682218).epsilon(1e-6));
  CHECK(gamma_fn(-1.5) == Approx(2.363271).epsilon(1e-6));
  CHECK(gamma_fn(0.5) == Approx(std::sqrt(std::numbers::pi)).epsilon(1e-14));
  // second moment over the full support is one
  CHECK(detail::truncated_abs_moment(s, 2.0, 1e12) == Approx(1.0).margin(1e-9));
}

TEST_CASE("alpha outside (2, 4) is rejected", "[heavytail]") {
  CHECK_THROWS_AS(HeavyTailSpec::make(2.0), ValidationError);
  CHECK_THROWS_AS(HeavyTailSpec::make(4.0), ValidationError);
  CHECK_THROWS_AS(HeavyTailSpec::make(std::nan("")), ValidationError);
  auto s = HeavyTailSpec::make(3.0);
  s.c *= 1.01;
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("samples follow the tail function", "[heavytail]") {
  for (double alpha : {2.5, 3.0, 3.5}) {
    const auto s = HeavyTailSpec::make(alpha, 5);
    const auto v = sample(s, 1000000, 0);
    CHECK(*std::min_element(v.begin(), v.end(), [](double a, double b) { return std::abs(a) < std::abs(b); }) !=
          0.0);
    for (double x : {1.0, 2.0, 5.0}) {
      std::size_t above = 0;
      for (double d : v) above += std::abs(d) > x;
      const double p = s.tail(x);
      const double se = std::sqrt(p * (1.0 - p) / v.size());
      CHECK(std::abs(static_cast<double>(above) / v.size() - p) < 3.0 * se);
    }
    std::size_t below = 0;
    for (double d : v) below += std::abs(d) < s.x_m;
    CHECK(below == 0);
    double mean = 0.0;
    for (double d : v) mean += d;
    CHECK(std::abs(mean / v.size()) < 0.02);
  }
}

TEST_CASE("sampling is a pure function of seed, stream and index", "[heavytail]") {
  const auto s = HeavyTailSpec::make(3.0, 11);
  CHECK(sample(s, 100, 4) == sample(s, 100, 4));
  CHECK(sample(s, 100, 4) != sample(s, 100, 5));
  const auto long_run = sample(s, 200, 4);
  const auto short_run = sample(s, 100, 4);
  CHECK(std::equal(short_run.begin(), short_run.end(), long_run.begin()));
  CHECK_THROWS_AS(sample(s, 0, 0), ValidationError);
}

TEST_CASE("truncation moments sit inside their envelopes", "[heavytail]") {
  const auto s = HeavyTailSpec::make(3.0);
  double prev_defect = INFINITY;
  for (std::size_t n : {100u, 1000u, 10000u, 100000u}) {
    const auto t = make_truncation(s, 0.01, n);
    CHECK(t.beta == Approx(0.25 + 1.0 / 3.0 + 0.01));
    CHECK(t.mu_N == 0.0);
    const auto m = truncated_moments(s, t, n);
    CHECK(m.sigma_N_sq < 1.0);
    CHECK(m.kappa_var < 10.0);
    CHECK(m.kappa_m4 < 10.0);
    CHECK(1.0 - m.sigma_N_sq < prev_defect);
    prev_defect = 1.0 - m.sigma_N_sq;
  }
  CHECK_THROWS_AS(make_truncation(s, 0.5, 100), ValidationError);
  CHECK_THROWS_AS(make_truncation(s, 0.0, 100), ValidationError);
}

TEST_CASE("truncate_center zeroes large entries", "[heavytail]") {
  const auto s = HeavyTailSpec::make(3.0);
  const auto t = make_truncation(s, 0.01, 100);
  const double X = t.threshold();
  const auto out = truncate_center({0.5, -0.5, X * 2.0, -X * 3.0}, 100, t);
  CHECK(out == std::vector<double>{0.5, -0.5, 0.0, 0.0});
  CHECK_THROWS_AS(truncate_center({1.0}, 99, t), ValidationError);
}

TEST_CASE("characteristic function basics", "[heavytail]") {
  const auto s = HeavyTailSpec::make(3.0);
  const auto t = make_truncation(s, 0.01, 1000);
  CHECK(phi_N(cplx{0.0, 0.0}, s, t, 1000) == cplx{1.0, 0.0});
  CHECK_THROWS_AS(phi_N(cplx{1.0, 0.5}, s, t, 1000), DomainError);
  for (cplx lam : {cplx{1.0, -1.0}, cplx{0.0, -2.0}, cplx{-3.0, 0.0}}) {
    const auto p = phi_N_detail(lam, s, t, 1000);
    CHECK(std::abs(p.phi) <= 1.0 + 1e-12);
    CHECK(std::abs(p.phi + p.one_minus_phi - 1.0) < 1e-15);
    // leading order 1 - i lambda sigma^2 / N
    CHECK(std::abs(p.one_minus_phi - cplx{0.0, 1.0} * lam * t.sigma_N_sq / 1000.0) <
          0.05 * std::abs(lam) / 1000.0);
  }
}
