// SPDX-License-Identifier: Apache-2.0
//
// Sample covariance matrices A = X X^T / N: construction, spectra, resolvent
// traces and the exact finite-size identities used as consistency checks.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

#include "hht/errors.hpp"
#include "hht/heavytail.hpp"
#include "hht/mplaw.hpp"
#include "hht/special.hpp"

namespace hht {

using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;

struct EnsembleSpec {
  std::size_t P = 1;
  std::size_t N = 1;
  double y_target = 1.0;
  HeavyTailSpec dist;
  bool truncate = false;
  std::optional<TruncationSpec> trunc;

  /// P = round(y N); the truncation spec is built at width N when requested.
  static EnsembleSpec make(std::size_t N, double y, const HeavyTailSpec& dist, bool truncate,
                           double epsilon = 0.01) {
    if (N < 1) throw ValidationError("ensemble: N must be >= 1");
    if (!(y > 0.0)) throw ValidationError("ensemble: y must be positive");
    EnsembleSpec e;
    e.N = N;
    e.y_target = y;
    e.P = static_cast<std::size_t>(std::llround(y * static_cast<double>(N)));
    if (e.P < 1) throw ValidationError("ensemble: round(y N) must be >= 1");
    e.dist = dist;
    e.truncate = truncate;
    if (truncate) e.trunc = make_truncation(dist, epsilon, N);
    return e;
  }

  void validate() const {
    if (P < 1 || N < 1) throw ValidationError("ensemble: P and N must be >= 1");
    dist.validate();
    if (truncate && (!trunc || trunc->N != N))
      throw ValidationError("ensemble: truncation requested without a matching spec");
  }
};

struct SpectralSample {
  std::vector<double> eigenvalues;  ///< ascending, non-negative
  std::size_t P = 0;
  std::size_t N = 0;
  std::uint64_t replica_id = 0;
};

/// Stream of column j in replica r.
inline std::uint64_t column_stream(std::uint64_t replica_id, std::size_t column) {
  return (replica_id << 32) | static_cast<std::uint64_t>(column & 0xffffffffu);
}

/// P x N data matrix of one replica; column j is drawn from its own stream.
inline Matrix build_matrix(const EnsembleSpec& spec, std::uint64_t replica_id) {
  spec.validate();
  constexpr std::size_t kMaxEntries = std::size_t{1} << 31;
  if (spec.N > 0xffffffffu || spec.P > kMaxEntries / spec.N)
    throw ResourceError("build_matrix: dimensions too large");
  Matrix X(static_cast<Eigen::Index>(spec.P), static_cast<Eigen::Index>(spec.N));
  for (std::size_t j = 0; j < spec.N; ++j) {
    std::span<double> col(X.col(static_cast<Eigen::Index>(j)).data(), spec.P);
    fill_samples(spec.dist, column_stream(replica_id, j), col);
    if (spec.truncate) truncate_center_inplace(col, *spec.trunc);
  }
  return X;
}

namespace detail {

inline double frobenius_scale(const Matrix& A) { return std::max(A.norm(), 1e-300); }

}  // namespace detail

/// Eigenvalues of X X^T / N in ascending order. When P > N the spectrum is
/// taken from the N x N Gram matrix X^T X / N and padded with P - N exact
/// zeros. With `check_pairs` the eigenvectors are computed as well and every
/// pair must satisfy |A v - lambda v| <= 1e-10 |A|.
inline SpectralSample spectrum(const Matrix& X, std::size_t N, std::uint64_t replica_id = 0,
                               bool check_pairs = false) {
  if (X.size() == 0) throw ValidationError("spectrum: empty matrix");
  if (N < 1) throw ValidationError("spectrum: N must be >= 1");
  const auto P = static_cast<std::size_t>(X.rows());
  const auto cols = static_cast<std::size_t>(X.cols());
  const bool gram = P > cols;
  Matrix A(gram ? X.cols() : X.rows(), gram ? X.cols() : X.rows());
  if (gram)
    A.noalias() = X.transpose() * X;
  else
    A.noalias() = X * X.transpose();
  A /= static_cast<double>(N);

  Eigen::SelfAdjointEigenSolver<Matrix> es(A, check_pairs ? Eigen::ComputeEigenvectors
                                                          : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "spectrum: eigensolver did not converge (replica " << replica_id << ", size "
       << A.rows() << ", |A|_F = " << A.norm() << ")";
    throw NumericError(os.str());
  }
  const double scale = detail::frobenius_scale(A);
  if (check_pairs) {
    const auto& V = es.eigenvectors();
    for (Eigen::Index k = 0; k < A.rows(); ++k) {
      const double r = (A * V.col(k) - es.eigenvalues()(k) * V.col(k)).norm();
      if (r > 1e-10 * scale) {
        std::ostringstream os;
        os << "spectrum: eigenpair " << k << " residual " << r << " exceeds 1e-10 |A|";
        throw NumericError(os.str());
      }
    }
  }
  SpectralSample out;
  out.P = P;
  out.N = N;
  out.replica_id = replica_id;
  out.eigenvalues.reserve(P);
  if (gram) out.eigenvalues.assign(P - cols, 0.0);
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    double v = es.eigenvalues()(k);
    if (v < 0.0) {
      if (v < -1e-10 * scale) {
        std::ostringstream os;
        os << "spectrum: eigenvalue " << v << " is negative beyond rounding";
        throw NumericError(os.str());
      }
      v = 0.0;
    }
    out.eigenvalues.push_back(v);
  }
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end());
  return out;
}

struct StieltjesValue {
  cplx trace_resolvent;  ///< Tr (z - A)^{-1}
  cplx normalized;       ///< trace / P
};

inline StieltjesValue stieltjes_empirical(const SpectralSample& sample, cplx z) {
  require_nonreal(z, "stieltjes_empirical");
  cplx tr{0.0, 0.0};
  for (double l : sample.eigenvalues) tr += 1.0 / (z - l);
  return {tr, tr / static_cast<double>(sample.eigenvalues.size())};
}

/// Tr (z - A)^{-1} for every point of a grid, from one spectrum.
inline std::vector<cplx> trace_resolvent_grid(const SpectralSample& sample,
                                              const std::vector<cplx>& grid) {
  std::vector<cplx> out;
  out.reserve(grid.size());
  for (const cplx z : grid) out.push_back(stieltjes_empirical(sample, z).trace_resolvent);
  return out;
}

/// A = X X^T / N as a dense matrix.
inline Matrix covariance(const Matrix& X, std::size_t N) {
  Matrix A = X * X.transpose();
  A /= static_cast<double>(N);
  return A;
}

/// G = (z - A)^{-1}, for the small matrices of the identity checks.
inline CMatrix resolvent_of(const Matrix& A, cplx z) {
  require_nonreal(z, "resolvent_entries");
  const auto n = A.rows();
  CMatrix M = -A.cast<cplx>();
  M.diagonal().array() += z;
  Eigen::PartialPivLU<CMatrix> lu(M);
  CMatrix G = lu.inverse();
  CMatrix R = M * G;
  R.diagonal().array() -= 1.0;
  const double res = R.cwiseAbs().maxCoeff();
  if (!(res <= 1e-8)) {
    std::ostringstream os;
    os << "resolvent: |(z - A) G - I|_max = " << res << " exceeds 1e-8 (size " << n << ")";
    throw NumericError(os.str());
  }
  return G;
}

inline CMatrix resolvent_entries(const Matrix& X, std::size_t N, cplx z) {
  return resolvent_of(covariance(X, N), z);
}

/// Max over rows of |sum_j |G_ij|^2 + Im G_ii / Im z|.
inline double ward_defect(const CMatrix& G, cplx z) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    const double lhs = G.row(i).cwiseAbs2().sum();
    const double rhs = -G(i, i).imag() / z.imag();
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

/// Whether |G_ii| <= 1/|Im z| for all i (with rounding slack).
inline bool diagonal_bound_holds(const CMatrix& G, cplx z) {
  const double bound = 1.0 / std::abs(z.imag());
  for (Eigen::Index i = 0; i < G.rows(); ++i)
    if (std::abs(G(i, i)) > bound * (1.0 + 1e-12)) return false;
  return true;
}

/// sgn Im(z Tr G) == -sgn Im z.
inline bool trace_sign_holds(const CMatrix& G, cplx z) {
  const double v = (z * G.trace()).imag();
  return v != 0.0 && (v > 0.0) != (z.imag() > 0.0);
}

/// sgn Im(z G_ii) == -sgn Im z for every i.
inline bool diagonal_sign_holds(const CMatrix& G, cplx z) {
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    const double v = (z * G(i, i)).imag();
    if (!(v != 0.0 && (v > 0.0) != (z.imag() > 0.0))) return false;
  }
  return true;
}

/// Numerical rank by singular value thresholding at 1e-10 |M|_2.
inline std::size_t numerical_rank(const Matrix& M) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double thr = 1e-10 * sv(0);
  std::size_t r = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > thr) ++r;
  return r;
}

struct RankCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  std::size_t rank = 0;
  bool holds = false;
};

/// |Tr G_{X X^T/N}(z) - Tr G_{Xh Xh^T/N}(z)| <= pi rank(X - Xh) / |Im z|.
inline RankCheck check_rank_inequality(const Matrix& X, const Matrix& X_hat, cplx z) {
  require_nonreal(z, "check_rank_inequality");
  if (X.rows() != X_hat.rows() || X.cols() != X_hat.cols())
    throw ValidationError("check_rank_inequality: shapes differ");
  const auto N = static_cast<std::size_t>(X.cols());
  const auto s1 = spectrum(X, N);
  const auto s2 = spectrum(X_hat, N);
  RankCheck rc;
  rc.lhs = std::abs(stieltjes_empirical(s1, z).trace_resolvent -
                    stieltjes_empirical(s2, z).trace_resolvent);
  rc.rank = numerical_rank(X - X_hat);
  rc.rhs = std::numbers::pi * static_cast<double>(rc.rank) / std::abs(z.imag());
  rc.holds = rc.lhs <= rc.rhs + 1e-8;
  return rc;
}

struct IdentityCheck {
  cplx lhs;
  cplx rhs;
  double rel_error = 0.0;
  bool holds = false;
};

struct DiagonalIdentity {
  IdentityCheck unscaled;  ///< the identity for X itself
  IdentityCheck scaled;    ///< the identity for X / sqrt(N)
  bool holds = false;
};

namespace detail {

inline IdentityCheck diagonal_identity_from(const Matrix& X, const Matrix& outer, const CMatrix& G,
                                            cplx z, Eigen::Index i) {
  const Eigen::VectorXd xi = X.col(i);
  // (z - B)^{-1} x_i by one solve instead of the full resolvent
  CMatrix M = -(outer - xi * xi.transpose()).cast<cplx>();
  M.diagonal().array() += z;
  const Eigen::VectorXcd xc = xi.cast<cplx>();
  const Eigen::VectorXcd v = Eigen::PartialPivLU<CMatrix>(M).solve(xc);
  const double res = (M * v - xc).cwiseAbs().maxCoeff();
  if (!(res <= 1e-8 * std::max(1.0, xc.cwiseAbs().maxCoeff()))) {
    std::ostringstream os;
    os << "diagonal identity: solve residual " << res << " too large";
    throw NumericError(os.str());
  }
  const cplx quad = z * xc.dot(v);
  IdentityCheck c;
  c.lhs = G(i, i);
  c.rhs = 1.0 / (z - quad);
  c.rel_error = std::abs(c.lhs - c.rhs) / std::max(std::abs(c.lhs), 1e-300);
  c.holds = c.rel_error <= 1e-8;
  return c;
}

/// (z - X^T X)^{-1}_{ii} against 1 / (z - x_i^T z (z - (X X^T - x_i x_i^T))^{-1} x_i).
inline IdentityCheck diagonal_identity(const Matrix& X, cplx z, Eigen::Index i) {
  const Matrix gram = X.transpose() * X;
  return diagonal_identity_from(X, X * X.transpose(), resolvent_of(gram, z), z, i);
}

}  // namespace detail

inline DiagonalIdentity check_diagonal_identity(const Matrix& X, std::size_t N, cplx z,
                                                std::size_t i) {
  require_nonreal(z, "check_diagonal_identity");
  if (i >= static_cast<std::size_t>(X.cols()))
    throw ValidationError("check_diagonal_identity: column index out of range");
  if (N < 1) throw ValidationError("check_diagonal_identity: N must be >= 1");
  DiagonalIdentity d;
  d.unscaled = detail::diagonal_identity(X, z, static_cast<Eigen::Index>(i));
  const Matrix Xs = X / std::sqrt(static_cast<double>(N));
  d.scaled = detail::diagonal_identity(Xs, z, static_cast<Eigen::Index>(i));
  d.holds = d.unscaled.holds && d.scaled.holds;
  return d;
}

/// The identity for every column, sharing one Gram resolvent per scaling.
inline std::vector<DiagonalIdentity> check_diagonal_identity_all(const Matrix& X, std::size_t N,
                                                                 cplx z) {
  require_nonreal(z, "check_diagonal_identity");
  if (N < 1) throw ValidationError("check_diagonal_identity: N must be >= 1");
  const Matrix Xs = X / std::sqrt(static_cast<double>(N));
  const Matrix g1 = X.transpose() * X;
  const Matrix g2 = Xs.transpose() * Xs;
  const CMatrix G1 = resolvent_of(g1, z);
  const CMatrix G2 = resolvent_of(g2, z);
  const Matrix o1 = X * X.transpose();
  const Matrix o2 = Xs * Xs.transpose();
  std::vector<DiagonalIdentity> out;
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    DiagonalIdentity d;
    d.unscaled = detail::diagonal_identity_from(X, o1, G1, z, i);
    d.scaled = detail::diagonal_identity_from(Xs, o2, G2, z, i);
    d.holds = d.unscaled.holds && d.scaled.holds;
    out.push_back(d);
  }
  return out;
}

/// Rows `replica,index,lambda` for one replica (no header).
inline void write_eigenvalue_rows(std::ostream& os, const SpectralSample& s) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t k = 0; k < s.eigenvalues.size(); ++k)
    os << s.replica_id << ',' << k << ',' << s.eigenvalues[k] << '\n';
  os.precision(old);
}

}  // namespace hht
