#pragma once

// Quadrature and scalar root-finding kernels shared by every module.

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "kplap/error.hpp"

namespace kplap::numerics {

enum class Scheme { CompositeSimpson, GaussLegendreComposite };

struct QuadratureSpec {
  int nodes = 257;
  Scheme scheme = Scheme::CompositeSimpson;

  static QuadratureSpec unit_test() { return {257, Scheme::CompositeSimpson}; }
  static QuadratureSpec production() { return {4097, Scheme::CompositeSimpson}; }

  void validate() const {
    if (nodes < 16) throw usage_error("quadrature needs at least 16 nodes, got " + std::to_string(nodes));
    if (scheme == Scheme::CompositeSimpson && nodes % 2 == 0)
      throw usage_error("composite Simpson needs an odd node count, got " + std::to_string(nodes));
  }
};

struct BracketSpec {
  double lo = 0.0;
  double hi = 1.0;
  double tol = 1e-12;
  int max_iter = 200;

  void validate() const {
    if (!(lo < hi)) throw usage_error("bracket requires lo < hi");
    if (!(tol > 0.0)) throw usage_error("bracket tolerance must be positive");
    if (max_iter < 1) throw usage_error("bracket max_iter must be positive");
  }
};

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

namespace detail {

inline std::string at_abscissa(double x) {
  std::ostringstream os;
  os.precision(17);
  os << "non-finite integrand value at x = " << x;
  return os.str();
}

template <class Fn>
double checked(Fn& fn, double x) {
  const double v = fn(x);
  if (!std::isfinite(v)) throw numeric_error(at_abscissa(x));
  return v;
}

}  // namespace detail

template <class Fn>
double integrate(Fn&& fn, double a, double b, const QuadratureSpec& spec) {
  spec.validate();
  if (!(a <= b)) throw usage_error("integrate requires a <= b");
  if (a == b) return 0.0;

  CompensatedSum acc;
  if (spec.scheme == Scheme::CompositeSimpson) {
    const int panels = spec.nodes - 1;
    const double h = (b - a) / panels;
    for (int i = 0; i <= panels; ++i) {
      const double x = (i == panels) ? b : a + i * h;
      const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      acc.add(w * detail::checked(fn, x));
    }
    return acc.value() * h / 3.0;
  }

  using rule = boost::math::quadrature::gauss<double, 10>;
  const int panels = std::max(1, spec.nodes / 10);
  const double h = (b - a) / panels;
  for (int k = 0; k < panels; ++k) {
    const double lo = a + k * h;
    const double hi = (k + 1 == panels) ? b : lo + h;
    acc.add(rule::integrate([&](double x) { return detail::checked(fn, x); }, lo, hi));
  }
  return acc.value();
}

enum class GradedEnd { Lower, Upper };

/// Integrates over [a, b] after the change of variables x = end +/- (b - a) t^power,
/// which clusters nodes at an endpoint where the integrand behaves like |x - end|^alpha.
/// With power = 6 the transformed integrand is C^4 for every alpha > -1/6.
template <class Fn>
double integrate_graded(Fn&& fn, double a, double b, GradedEnd end, const QuadratureSpec& spec,
                        int power = 6) {
  if (!(a <= b)) throw usage_error("integrate_graded requires a <= b");
  if (a == b) return 0.0;
  const double len = b - a;
  auto mapped = [&](double t) {
    if (t == 0.0) return 0.0;
    const double jac = len * power * std::pow(t, power - 1);
    const double x = end == GradedEnd::Lower ? a + len * std::pow(t, power) : b - len * std::pow(t, power);
    return jac * fn(x);
  };
  return integrate(mapped, 0.0, 1.0, spec);
}

/// Root of a monotone increasing function by bisection with Illinois-style secant steps.
/// Returns t inside [lo, hi] with |fn(t)| <= tol or a final bracket narrower than tol.
template <class Fn>
double find_root_monotone(Fn&& fn, const BracketSpec& bracket) {
  bracket.validate();
  double a = bracket.lo;
  double b = bracket.hi;
  double fa = fn(a);
  double fb = fn(b);
  if (!std::isfinite(fa) || !std::isfinite(fb)) throw numeric_error("non-finite function value at bracket endpoint");
  if (fa > 0.0 || fb < 0.0) {
    std::ostringstream os;
    os.precision(17);
    os << "root bracket [" << a << ", " << b << "] does not straddle zero: f(lo) = " << fa << ", f(hi) = " << fb;
    throw bracket_error(os.str(), fa, fb);
  }
  if (std::abs(fa) <= bracket.tol) return a;
  if (std::abs(fb) <= bracket.tol) return b;

  int side = 0;  // which endpoint survived the last update; -1 = a, +1 = b
  for (int it = 0; it < bracket.max_iter; ++it) {
    if (b - a <= bracket.tol) return std::abs(fa) < std::abs(fb) ? a : b;

    double x = (a * fb - b * fa) / (fb - fa);
    // fall back to bisection when the secant step hugs an endpoint
    const double margin = 0.01 * (b - a);
    if (!(x > a + margin && x < b - margin)) x = 0.5 * (a + b);
    if (it % 4 == 3) x = 0.5 * (a + b);

    const double fx = fn(x);
    if (!std::isfinite(fx)) throw numeric_error(detail::at_abscissa(x));
    if (std::abs(fx) <= bracket.tol) return x;
    if (fx < 0.0) {
      a = x;
      fa = fx;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = x;
      fb = fx;
      if (side == +1) fa *= 0.5;
      side = +1;
    }
  }
  std::ostringstream os;
  os.precision(17);
  os << "root finder exceeded " << bracket.max_iter << " iterations, bracket [" << a << ", " << b << "]";
  throw convergence_error(os.str());
}

/// Quadrature weights for samples on a uniform grid of n nodes with spacing h.
/// Composite Simpson; an even node count closes with a 3/8 panel.
inline std::vector<double> grid_weights(std::size_t n, double h) {
  if (n < 4) throw usage_error("grid quadrature needs at least 4 nodes");
  std::vector<double> w(n, 0.0);
  const std::size_t simpson_end = (n % 2 == 1) ? n - 1 : n - 4;
  for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
    w[i] += h / 3.0;
    w[i + 1] += 4.0 * h / 3.0;
    w[i + 2] += h / 3.0;
  }
  if (n % 2 == 0) {
    const std::size_t s = n - 4;
    w[s] += 3.0 * h / 8.0;
    w[s + 1] += 9.0 * h / 8.0;
    w[s + 2] += 9.0 * h / 8.0;
    w[s + 3] += 3.0 * h / 8.0;
  }
  return w;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n < 2) throw usage_error("linspace needs at least 2 points");
  std::vector<double> x(n);
  const double h = (b - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) x[i] = a + static_cast<double>(i) * h;
  x.back() = b;
  return x;
}

}  // namespace kplap::numerics
