// SPDX-License-Identifier: Apache-2.0
//
// Replica engine for theta_N(z) = N^{-(1 - alpha/4)} (Tr G(z) - E Tr G(z)).
//
// Each replica draws X, takes one eigendecomposition and evaluates Tr G on the
// whole z-grid. E Tr G is replaced by the replica mean; the (M - 1) divisor
// removes the resulting O(1/M) bias. Replicas run in parallel, each writing
// only its own row, and every reduction afterwards walks the replicas in
// index order, so results do not depend on the thread count.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include <omp.h>

#include "hht/errors.hpp"
#include "hht/kernel.hpp"
#include "hht/mplaw.hpp"
#include "hht/rng.hpp"
#include "hht/spectral.hpp"

namespace hht {

/// Row and column index sets (0-based) of two submatrices of one P x N draw.
struct OverlapIndexSets {
  std::vector<std::size_t> rows_i, rows_j, cols_i, cols_j;

  void validate(std::size_t P, std::size_t N) const {
    auto check = [](const std::vector<std::size_t>& v, std::size_t bound, const char* name) {
      if (v.empty()) {
        std::ostringstream os;
        os << "overlap: " << name << " is empty";
        throw ValidationError(os.str());
      }
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (v[k] >= bound || (k > 0 && v[k] <= v[k - 1])) {
          std::ostringstream os;
          os << "overlap: " << name << " must be strictly increasing indices below " << bound;
          throw ValidationError(os.str());
        }
      }
    };
    check(rows_i, P, "rows_i");
    check(rows_j, P, "rows_j");
    check(cols_i, N, "cols_i");
    check(cols_j, N, "cols_j");
  }

  static std::size_t intersection_size(const std::vector<std::size_t>& a,
                                       const std::vector<std::size_t>& b) {
    std::vector<std::size_t> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out.size();
  }

  /// Finite-N fractions |P_i|/N, |Q_i|/N and |P_i n P_j| |Q_i n Q_j| / N^2.
  OverlapParams empirical(std::size_t N) const {
    const double n = static_cast<double>(N);
    OverlapParams op;
    op.p_i = static_cast<double>(rows_i.size()) / n;
    op.p_j = static_cast<double>(rows_j.size()) / n;
    op.q_i = static_cast<double>(cols_i.size()) / n;
    op.q_j = static_cast<double>(cols_j.size()) / n;
    op.gamma_ij = static_cast<double>(intersection_size(rows_i, rows_j)) *
                  static_cast<double>(intersection_size(cols_i, cols_j)) / (n * n);
    return op;
  }

  static std::vector<std::size_t> range(std::size_t begin, std::size_t end) {
    std::vector<std::size_t> v;
    for (std::size_t k = begin; k < end; ++k) v.push_back(k);
    return v;
  }

  /// Both submatrices are the full matrix.
  static OverlapIndexSets full(std::size_t P, std::size_t N) {
    return {range(0, P), range(0, P), range(0, N), range(0, N)};
  }

  /// Two blocks of 2/3 of the rows and columns overlapping on half of each.
  static OverlapIndexSets half(std::size_t P, std::size_t N) {
    const std::size_t r = (2 * P) / 3, c = (2 * N) / 3;
    return {range(0, r), range(P - r, P), range(0, c), range(N - c, N)};
  }

  /// Disjoint rows and disjoint columns.
  static OverlapIndexSets disjoint(std::size_t P, std::size_t N) {
    if (P < 2 || N < 2) throw ValidationError("overlap: disjoint sets need P, N >= 2");
    return {range(0, P / 2), range(P / 2, P), range(0, N / 2), range(N / 2, N)};
  }
};

struct McPlan {
  EnsembleSpec ensemble;
  std::vector<cplx> z_grid;
  std::size_t M = 2;
  std::optional<OverlapIndexSets> overlap;
  int threads = 1;
  bool identical_replicas = false;  ///< test knob: every replica reuses draw 0

  void validate() const {
    ensemble.validate();
    if (z_grid.empty()) throw ValidationError("mc plan: z_grid is empty");
    for (const cplx z : z_grid) require_nonreal(z, "mc plan z_grid");
    if (M < 2) throw ValidationError("mc plan: need M >= 2 replicas");
    if (threads < 1) throw ValidationError("mc plan: threads must be >= 1");
    if (overlap) overlap->validate(ensemble.P, ensemble.N);
  }
};

/// K x K complex matrix, row-major.
struct CovMatrix {
  std::size_t K = 0;
  std::vector<cplx> v;
  cplx operator()(std::size_t k, std::size_t l) const { return v[k * K + l]; }
  cplx& operator()(std::size_t k, std::size_t l) { return v[k * K + l]; }
};

/// Sample moments of centred, scaled replica statistics.
struct McResult {
  std::size_t M = 0;
  std::size_t K = 0;
  std::vector<cplx> z_grid;
  std::vector<cplx> theta;       ///< M x K row-major
  std::vector<cplx> mean_trace;  ///< replica mean of Tr G(z_k)
  CovMatrix pseudo;              ///< (1/(M-1)) sum theta(z_k) theta(z_l)
  CovMatrix cov;                 ///< (1/(M-1)) sum theta(z_k) conj theta(z_l)
  CovMatrix pseudo_se;           ///< jackknife standard errors (real parts used)
  CovMatrix cov_se;
  std::vector<std::size_t> dropped;

  cplx theta_at(std::size_t m, std::size_t k) const { return theta[m * K + k]; }
};

struct McOverlapResult {
  McResult first;
  McResult second;
  CovMatrix cross_pseudo;  ///< theta^[i](z_k) theta^[j](z_l)
  CovMatrix cross_cov;     ///< theta^[i](z_k) conj theta^[j](z_l)
  CovMatrix cross_pseudo_se;
  CovMatrix cross_cov_se;
  OverlapParams params;
};

namespace detail {

inline double theta_scale(double alpha, std::size_t N) {
  return std::pow(static_cast<double>(N), -(1.0 - 0.25 * alpha));
}

struct ReplicaTraces {
  std::vector<cplx> a;  ///< M x K
  std::vector<cplx> b;  ///< second submatrix, overlap runs only
  std::vector<char> ok;
};

inline std::vector<Eigen::Index> as_index(const std::vector<std::size_t>& v) {
  return {v.begin(), v.end()};
}

inline void fill_traces(const SpectralSample& s, const std::vector<cplx>& grid, cplx* out) {
  for (std::size_t k = 0; k < grid.size(); ++k)
    out[k] = stieltjes_empirical(s, grid[k]).trace_resolvent;
}

inline ReplicaTraces simulate(const McPlan& plan) {
  plan.validate();
  const std::size_t M = plan.M;
  const std::size_t K = plan.z_grid.size();
  const bool two = plan.overlap.has_value();
  ReplicaTraces rt;
  rt.a.assign(M * K, cplx{});
  if (two) rt.b.assign(M * K, cplx{});
  rt.ok.assign(M, 1);
  std::vector<std::string> messages(M);

  std::vector<Eigen::Index> ri, rj, ci, cj;
  if (two) {
    ri = as_index(plan.overlap->rows_i);
    rj = as_index(plan.overlap->rows_j);
    ci = as_index(plan.overlap->cols_i);
    cj = as_index(plan.overlap->cols_j);
  }
  const auto count = static_cast<long>(M);
#pragma omp parallel for schedule(dynamic, 1) num_threads(plan.threads)
  for (long mi = 0; mi < count; ++mi) {
    const auto m = static_cast<std::size_t>(mi);
    const std::uint64_t draw = plan.identical_replicas ? 0 : m;
    try {
      const Matrix X = build_matrix(plan.ensemble, draw);
      if (!two) {
        fill_traces(spectrum(X, plan.ensemble.N, draw), plan.z_grid, &rt.a[m * K]);
      } else {
        const Matrix Xi = X(ri, ci);
        const Matrix Xj = X(rj, cj);
        fill_traces(spectrum(Xi, plan.ensemble.N, draw), plan.z_grid, &rt.a[m * K]);
        fill_traces(spectrum(Xj, plan.ensemble.N, draw), plan.z_grid, &rt.b[m * K]);
      }
    } catch (const NumericError& e) {
      rt.ok[m] = 0;
      messages[m] = e.what();
    }
  }
  std::size_t drops = 0;
  for (std::size_t m = 0; m < M; ++m) {
    if (!rt.ok[m]) {
      ++drops;
      std::cerr << "replica " << m << " dropped: " << messages[m] << '\n';
    }
  }
  if (static_cast<double>(drops) > 0.01 * static_cast<double>(M)) {
    std::ostringstream os;
    os << "mc: " << drops << " of " << M << " replicas dropped (more than 1%)";
    throw NumericError(os.str());
  }
  return rt;
}

/// Keeps the surviving replicas, centres each column at its mean and scales.
inline McResult center_and_scale(const std::vector<cplx>& traces, const std::vector<char>& ok,
                                 const std::vector<cplx>& grid, double scale) {
  const std::size_t K = grid.size();
  const std::size_t M_all = ok.size();
  McResult r;
  r.K = K;
  r.z_grid = grid;
  for (std::size_t m = 0; m < M_all; ++m)
    if (!ok[m]) r.dropped.push_back(m);
  r.M = M_all - r.dropped.size();
  if (r.M < 2) throw NumericError("mc: fewer than two usable replicas");
  r.mean_trace.assign(K, cplx{});
  for (std::size_t m = 0; m < M_all; ++m)
    if (ok[m])
      for (std::size_t k = 0; k < K; ++k) r.mean_trace[k] += traces[m * K + k];
  for (auto& v : r.mean_trace) v /= static_cast<double>(r.M);
  r.theta.reserve(r.M * K);
  for (std::size_t m = 0; m < M_all; ++m)
    if (ok[m])
      for (std::size_t k = 0; k < K; ++k)
        r.theta.push_back((traces[m * K + k] - r.mean_trace[k]) * scale);
  return r;
}

/// Second-moment estimator of centred rows a, b (each M x K) with jackknife
/// standard errors. Leave-one-out estimates follow in closed form from
/// C_(-m) = (S - M/(M-1) a_m b_m) / (M - 2), S = sum a b.
inline void second_moment(const std::vector<cplx>& a, const std::vector<cplx>& b, std::size_t M,
                          std::size_t K, bool conjugate, CovMatrix& est, CovMatrix& se) {
  est.K = K;
  se.K = K;
  est.v.assign(K * K, cplx{});
  se.v.assign(K * K, cplx{});
  const double md = static_cast<double>(M);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t l = 0; l < K; ++l) {
      auto prod = [&](std::size_t m) {
        const cplx x = a[m * K + k];
        const cplx y = conjugate ? std::conj(b[m * K + l]) : b[m * K + l];
        return x * y;
      };
      cplx S{};
      for (std::size_t m = 0; m < M; ++m) S += prod(m);
      est(k, l) = S / (md - 1.0);
      if (M < 3) continue;
      cplx loo_mean{};
      std::vector<cplx> loo(M);
      for (std::size_t m = 0; m < M; ++m) {
        loo[m] = (S - md / (md - 1.0) * prod(m)) / (md - 2.0);
        loo_mean += loo[m];
      }
      loo_mean /= md;
      double ss = 0.0;
      for (std::size_t m = 0; m < M; ++m) ss += std::norm(loo[m] - loo_mean);
      se(k, l) = std::sqrt((md - 1.0) / md * ss);
    }
  }
}

inline void attach_moments(McResult& r) {
  second_moment(r.theta, r.theta, r.M, r.K, false, r.pseudo, r.pseudo_se);
  second_moment(r.theta, r.theta, r.M, r.K, true, r.cov, r.cov_se);
}

}  // namespace detail

/// Single-matrix run; the plan's overlap sets, if any, are ignored.
inline McResult run_replicas(const McPlan& plan) {
  McPlan single = plan;
  single.overlap.reset();
  const auto rt = detail::simulate(single);
  auto r = detail::center_and_scale(rt.a, rt.ok, plan.z_grid,
                                    detail::theta_scale(plan.ensemble.dist.alpha, plan.ensemble.N));
  detail::attach_moments(r);
  return r;
}

/// Both submatrix statistics from the same draw, plus their cross moments.
inline McOverlapResult run_overlap_replicas(const McPlan& plan) {
  if (!plan.overlap) throw ValidationError("run_overlap_replicas: plan has no overlap sets");
  const auto rt = detail::simulate(plan);
  const double scale = detail::theta_scale(plan.ensemble.dist.alpha, plan.ensemble.N);
  McOverlapResult out;
  out.first = detail::center_and_scale(rt.a, rt.ok, plan.z_grid, scale);
  out.second = detail::center_and_scale(rt.b, rt.ok, plan.z_grid, scale);
  detail::attach_moments(out.first);
  detail::attach_moments(out.second);
  const std::size_t M = out.first.M, K = out.first.K;
  detail::second_moment(out.first.theta, out.second.theta, M, K, false, out.cross_pseudo,
                        out.cross_pseudo_se);
  detail::second_moment(out.first.theta, out.second.theta, M, K, true, out.cross_cov,
                        out.cross_cov_se);
  out.params = plan.overlap->empirical(plan.ensemble.N);
  return out;
}

/// Replaces theta by i.i.d. standard complex Gaussians (unit-test calibration).
inline void inject_gaussian(McResult& r, std::uint64_t seed) {
  CounterEngine eng(seed, 0x6761757373ull);
  std::normal_distribution<double> nd;
  for (auto& t : r.theta) {
    const double re = nd(eng);
    const double im = nd(eng);
    t = {re, im};
  }
  detail::attach_moments(r);
}

// ---------------------------------------------------------------------------
// Gaussianity diagnostics.

struct MomentInterval {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool pass = false;  ///< the interval meets [-band, band]
};

struct SeriesDiagnostics {
  MomentInterval skewness;
  MomentInterval excess_kurtosis;
};

struct GaussianityReport {
  cplx z;
  std::size_t M = 0;
  double band = 0.6;
  SeriesDiagnostics re;
  SeriesDiagnostics im;
  bool pass() const {
    return re.skewness.pass && re.excess_kurtosis.pass && im.skewness.pass &&
           im.excess_kurtosis.pass;
  }
};

namespace detail {

struct ShapeMoments {
  double skew;
  double kurt;
};

inline ShapeMoments shape_moments(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) throw DomainError("gaussianity: degenerate (zero) variance");
  return {m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
}

inline SeriesDiagnostics bootstrap_shape(const std::vector<double>& x, std::size_t B,
                                         std::uint64_t seed, std::uint64_t stream, double band) {
  const auto point = shape_moments(x);
  CounterEngine eng(seed, stream);
  std::vector<double> skews, kurts, resample(x.size());
  skews.reserve(B);
  kurts.reserve(B);
  const std::uint64_t n = x.size();
  for (std::size_t b = 0; b < B; ++b) {
    for (auto& v : resample) v = x[static_cast<std::size_t>(eng() % n)];
    try {
      const auto s = shape_moments(resample);
      skews.push_back(s.skew);
      kurts.push_back(s.kurt);
    } catch (const DomainError&) {
      // a constant resample carries no shape information
    }
  }
  if (skews.empty()) throw DomainError("gaussianity: every bootstrap resample is degenerate");
  auto interval = [&](std::vector<double>& v, double est) {
    std::sort(v.begin(), v.end());
    const auto at = [&](double q) {
      const auto i = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
      return v[i];
    };
    MomentInterval mi;
    mi.estimate = est;
    mi.lo = at(0.025);
    mi.hi = at(0.975);
    mi.pass = mi.lo <= band && mi.hi >= -band;
    return mi;
  };
  return {interval(skews, point.skew), interval(kurts, point.kurt)};
}

}  // namespace detail

/// Skewness and excess kurtosis of Re theta(z_k) and Im theta(z_k) with
/// percentile bootstrap 95% intervals.
inline GaussianityReport gaussianity_diagnostics(const McResult& r, std::size_t k,
                                                 std::size_t bootstrap = 1000,
                                                 std::uint64_t seed = 0, double band = 0.6,
                                                 std::size_t min_replicas = 500) {
  if (k >= r.K) throw ValidationError("gaussianity: grid index out of range");
  if (r.M < min_replicas) {
    std::ostringstream os;
    os << "gaussianity: need at least " << min_replicas << " replicas, have " << r.M;
    throw ValidationError(os.str());
  }
  std::vector<double> re(r.M), im(r.M);
  for (std::size_t m = 0; m < r.M; ++m) {
    re[m] = r.theta_at(m, k).real();
    im[m] = r.theta_at(m, k).imag();
  }
  GaussianityReport rep;
  rep.z = r.z_grid[k];
  rep.M = r.M;
  rep.band = band;
  rep.re = detail::bootstrap_shape(re, bootstrap, seed, 2 * k, band);
  rep.im = detail::bootstrap_shape(im, bootstrap, seed, 2 * k + 1, band);
  return rep;
}

// ---------------------------------------------------------------------------
// Empirical spectral distribution against the MP law.

/// sup_x |F_emp(x) - F_MP(x)| over pooled eigenvalues, with F_emp checked on
/// both sides of every jump.
inline double esd_kolmogorov(std::vector<double> eigenvalues, double y,
                             const QuadratureConfig& cfg = {1e-10, 1e-13, 12, 40.0}) {
  if (eigenvalues.empty()) throw ValidationError("esd_compare: no eigenvalues");
  std::sort(eigenvalues.begin(), eigenvalues.end());
  const double n = static_cast<double>(eigenvalues.size());
  double d = 0.0;
  std::size_t k = 0;
  while (k < eigenvalues.size()) {
    const double x = eigenvalues[k];
    std::size_t j = k;
    while (j < eigenvalues.size() && eigenvalues[j] == x) ++j;
    const double F = mp_cdf(x, y, cfg);
    d = std::max(d, std::abs(static_cast<double>(k) / n - F));
    d = std::max(d, std::abs(static_cast<double>(j) / n - F));
    k = j;
  }
  return d;
}

inline double esd_compare(const std::vector<SpectralSample>& samples, double y) {
  if (samples.empty()) throw ValidationError("esd_compare: need at least one replica");
  std::vector<double> all;
  for (const auto& s : samples) all.insert(all.end(), s.eigenvalues.begin(), s.eigenvalues.end());
  return esd_kolmogorov(std::move(all), y);
}

inline double esd_compare(const SpectralSample& sample, double y) {
  return esd_kolmogorov(sample.eigenvalues, y);
}

}  // namespace hht
