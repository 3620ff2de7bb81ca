// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace hht {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter record violates its invariants (bad alpha, empty request, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a function (real z for a resolvent, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Allocation request that cannot be honoured.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Numerical procedure failed to reach its target. Carries the best value
/// found and the achieved error estimate when those are meaningful.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what,
                        std::complex<double> best = {0.0, 0.0},
                        double err_est = 0.0)
      : Error(what), best_(best), err_est_(err_est) {}

  std::complex<double> best_value() const noexcept { return best_; }
  double err_est() const noexcept { return err_est_; }

 private:
  std::complex<double> best_;
  double err_est_;
};

/// An identity check failed beyond its tolerance.
class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace hht
