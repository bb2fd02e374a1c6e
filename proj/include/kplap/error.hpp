#pragma once

#include <stdexcept>
#include <string>

namespace kplap {

/// Root of every error thrown by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a map (p <= 2, lambda > 1, ...).
class domain_error : public error {
 public:
  using error::error;
};

class geometry_error : public error {
 public:
  using error::error;
};

/// Density does not satisfy the normalized balance condition.
class balance_error : public error {
 public:
  using error::error;
};

/// Non-finite integrand values or quadrature breakdown.
class numeric_error : public error {
 public:
  using error::error;
};

/// Root bracket endpoints do not straddle zero.
class bracket_error : public error {
 public:
  double f_lo;
  double f_hi;
  bracket_error(const std::string& what, double lo_value, double hi_value)
      : error(what), f_lo(lo_value), f_hi(hi_value) {}
};

class convergence_error : public error {
 public:
  using error::error;
};

/// API misuse: mismatched grids, wrong case kind, invalid test functions.
class usage_error : public error {
 public:
  using error::error;
};

class parse_error : public error {
 public:
  using error::error;
};

}  // namespace kplap
