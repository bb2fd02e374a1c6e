#pragma once

// Geometries, radial densities and the normalized balance condition.
//
// All computation happens in radial coordinates about each ball's own center, so ball
// centers are not represented. The signed datum f = f+ - f- is carried implicitly by
// the pair of densities.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "kplap/error.hpp"

namespace kplap {

struct Interval {
  double a = 0.0;
  double b = 1.0;

  double length() const { return b - a; }
  bool contains(double r, double slack = 0.0) const { return r >= a - slack && r <= b + slack; }
};

enum class CaseKind { DisjointBalls, AnnulusOuterSource, AnnulusInnerSource };
enum class Side { Source, Sink };

inline const char* to_string(CaseKind k) {
  switch (k) {
    case CaseKind::DisjointBalls: return "disjoint";
    case CaseKind::AnnulusOuterSource: return "annulus-outer";
    case CaseKind::AnnulusInnerSource: return "annulus-inner";
  }
  return "?";
}

inline const char* to_string(Side s) { return s == Side::Source ? "source" : "sink"; }

/// Surface area of the unit (n-1)-sphere, 2 pi^{n/2} / Gamma(n/2).
inline double surface_constant(int n) {
  if (n < 1) throw domain_error("invalid dimension n = " + std::to_string(n) + " (need n >= 1)");
  const double half = 0.5 * n;
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

/// Nonnegative continuous radial density on a closed interval [a, b], zero outside it.
class RadialDensity {
 public:
  struct Uniform {
    double value;
  };
  struct PowerLaw {
    double coefficient;
    double exponent;
  };
  struct Tabulated {
    std::vector<double> r;
    std::vector<double> values;
  };
  using Form = std::variant<Uniform, PowerLaw, Tabulated>;

  static RadialDensity uniform(double value, Interval domain) { return RadialDensity(Uniform{value}, domain); }

  /// coefficient * r^exponent with exponent >= 0.
  static RadialDensity power_law(double coefficient, double exponent, Interval domain) {
    return RadialDensity(PowerLaw{coefficient, exponent}, domain);
  }

  /// Piecewise-linear interpolation of (r, values); the domain is [r.front(), r.back()].
  static RadialDensity tabulated(std::vector<double> r, std::vector<double> values) {
    if (r.size() < 2 || r.size() != values.size())
      throw usage_error("tabulated density needs matching grids with at least 2 nodes");
    Interval dom{r.front(), r.back()};
    return RadialDensity(Tabulated{std::move(r), std::move(values)}, dom);
  }

  const Interval& domain() const { return domain_; }
  const Form& form() const { return form_; }

  double operator()(double r) const {
    if (!domain_.contains(r)) return 0.0;
    return std::visit([r](const auto& f) { return eval(f, r); }, form_);
  }

  /// int_lo^hi f(rho) rho^{n-1} drho in closed form, restricted to the domain.
  double moment(double lo, double hi, int n) const {
    const double u = std::max(lo, domain_.a);
    const double v = std::min(hi, domain_.b);
    if (!(u < v)) return 0.0;
    const double m = std::visit([&](const auto& f) { return moment_impl(f, u, v, n); }, form_);
    if (!std::isfinite(m)) {
      std::ostringstream os;
      os.precision(17);
      os << "non-finite density moment on [" << u << ", " << v << "]";
      throw numeric_error(os.str());
    }
    return m;
  }

  RadialDensity scaled(double s) const {
    if (!(s >= 0.0)) throw domain_error("density scale factor must be nonnegative");
    Form f = std::visit(
        [s](const auto& g) -> Form {
          using T = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return Uniform{g.value * s};
          } else if constexpr (std::is_same_v<T, PowerLaw>) {
            return PowerLaw{g.coefficient * s, g.exponent};
          } else {
            Tabulated t = g;
            for (double& v : t.values) v *= s;
            return t;
          }
        },
        form_);
    return RadialDensity(std::move(f), domain_);
  }

 private:
  RadialDensity(Form form, Interval domain) : form_(std::move(form)), domain_(domain) { validate(); }

  void validate() const {
    if (!(domain_.a >= 0.0 && domain_.a < domain_.b && std::isfinite(domain_.b)))
      throw geometry_error("density domain must satisfy 0 <= a < b");
    if (const auto* u = std::get_if<Uniform>(&form_)) {
      if (!(u->value >= 0.0 && std::isfinite(u->value))) throw domain_error("uniform density must be finite and >= 0");
    } else if (const auto* p = std::get_if<PowerLaw>(&form_)) {
      if (!(p->coefficient >= 0.0 && std::isfinite(p->coefficient)))
        throw domain_error("power-law coefficient must be finite and >= 0");
      if (!(p->exponent >= 0.0 && std::isfinite(p->exponent)))
        throw domain_error("power-law exponent must be >= 0 for continuity at r = 0");
    } else {
      const auto& t = std::get<Tabulated>(form_);
      for (std::size_t i = 0; i < t.r.size(); ++i) {
        if (!(t.values[i] >= 0.0 && std::isfinite(t.values[i])))
          throw domain_error("tabulated density values must be finite and >= 0");
        if (i > 0 && !(t.r[i] > t.r[i - 1])) throw usage_error("tabulated density grid must be strictly increasing");
      }
    }
  }

  static double eval(const Uniform& f, double) { return f.value; }
  static double eval(const PowerLaw& f, double r) { return f.coefficient * std::pow(r, f.exponent); }
  static double eval(const Tabulated& f, double r) {
    auto it = std::upper_bound(f.r.begin(), f.r.end(), r);
    if (it == f.r.begin()) return f.values.front();
    if (it == f.r.end()) return f.values.back();
    const std::size_t i = static_cast<std::size_t>(it - f.r.begin()) - 1;
    const double s = (r - f.r[i]) / (f.r[i + 1] - f.r[i]);
    return f.values[i] + s * (f.values[i + 1] - f.values[i]);
  }

  static double moment_impl(const Uniform& f, double u, double v, int n) {
    return f.value * (std::pow(v, n) - std::pow(u, n)) / n;
  }
  static double moment_impl(const PowerLaw& f, double u, double v, int n) {
    const double e = f.exponent + n;
    return f.coefficient * (std::pow(v, e) - std::pow(u, e)) / e;
  }
  static double moment_impl(const Tabulated& f, double u, double v, int n) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < f.r.size(); ++i) {
      const double x0 = f.r[i];
      const double x1 = f.r[i + 1];
      const double lo = std::max(u, x0);
      const double hi = std::min(v, x1);
      if (!(lo < hi)) continue;
      // f = c0 + s * rho on this segment
      const double s = (f.values[i + 1] - f.values[i]) / (x1 - x0);
      const double c0 = f.values[i] - s * x0;
      acc += c0 * (std::pow(hi, n) - std::pow(lo, n)) / n + s * (std::pow(hi, n + 1) - std::pow(lo, n + 1)) / (n + 1);
    }
    return acc;
  }

  Form form_;
  Interval domain_;
};

struct BalanceReport {
  double mass_plus = 0.0;
  double mass_minus = 0.0;
  bool normalized = false;

  static constexpr double tolerance = 1e-10;
};

/// Geometry descriptor. Disjoint balls: f+ on [0, R1], f- on [0, R2].
/// Annulus with outer source (R1 > R2): f+ on [R2, R1], f- on [0, R2].
/// Annulus with inner source (R2 > R1): f+ on [0, R1], f- on [R1, R2].
struct ProblemCase {
  CaseKind kind = CaseKind::DisjointBalls;
  int dimension = 2;
  double R1 = 1.0;
  double R2 = 1.0;
  RadialDensity f_plus = RadialDensity::uniform(1.0, {0.0, 1.0});
  RadialDensity f_minus = RadialDensity::uniform(1.0, {0.0, 1.0});

  Interval expected_support(Side side) const {
    switch (kind) {
      case CaseKind::DisjointBalls: return side == Side::Source ? Interval{0.0, R1} : Interval{0.0, R2};
      case CaseKind::AnnulusOuterSource: return side == Side::Source ? Interval{R2, R1} : Interval{0.0, R2};
      case CaseKind::AnnulusInnerSource: return side == Side::Source ? Interval{0.0, R1} : Interval{R1, R2};
    }
    return {};
  }

  /// Sides that carry a nontrivial potential.
  std::vector<Side> active_sides() const {
    switch (kind) {
      case CaseKind::DisjointBalls: return {Side::Source, Side::Sink};
      case CaseKind::AnnulusOuterSource: return {Side::Source};
      case CaseKind::AnnulusInnerSource: return {Side::Sink};
    }
    return {};
  }

  const RadialDensity& density(Side side) const { return side == Side::Source ? f_plus : f_minus; }

  /// Signed datum f on the working interval of a side: +f+ or -f-.
  double signed_density(Side side, double r) const { return side == Side::Source ? f_plus(r) : -f_minus(r); }

  bool is_annulus() const { return kind != CaseKind::DisjointBalls; }

  void validate() const {
    if (dimension < 2) throw geometry_error("dimension must be >= 2, got " + std::to_string(dimension));
    if (!(R1 > 0.0 && R2 > 0.0 && std::isfinite(R1) && std::isfinite(R2)))
      throw geometry_error("radii must be positive and finite");
    if (kind == CaseKind::AnnulusOuterSource && !(R1 > R2))
      throw geometry_error("annulus with outer source requires R1 > R2 > 0");
    if (kind == CaseKind::AnnulusInnerSource && !(R2 > R1))
      throw geometry_error("annulus with inner source requires R2 > R1 > 0");
    for (Side s : {Side::Source, Side::Sink}) {
      const Interval want = expected_support(s);
      const Interval got = density(s).domain();
      const double scale = std::max(R1, R2);
      if (std::abs(got.a - want.a) > 1e-12 * scale || std::abs(got.b - want.b) > 1e-12 * scale) {
        std::ostringstream os;
        os.precision(17);
        os << to_string(s) << " density support [" << got.a << ", " << got.b << "] does not match the "
           << to_string(kind) << " support [" << want.a << ", " << want.b << "]";
        throw geometry_error(os.str());
      }
      // spot check on 1024 nodes; continuity is assumed, not proven
      constexpr int probes = 1024;
      for (int i = 0; i < probes; ++i) {
        const double r = got.a + got.length() * i / (probes - 1);
        const double v = density(s)(r);
        if (!(v >= 0.0 && std::isfinite(v))) throw domain_error(std::string(to_string(s)) + " density is negative or non-finite");
      }
    }
  }
};

inline BalanceReport check_balance(const ProblemCase& pc) {
  const double w = surface_constant(pc.dimension);
  BalanceReport rep;
  const Interval sp = pc.f_plus.domain();
  const Interval sm = pc.f_minus.domain();
  rep.mass_plus = w * pc.f_plus.moment(sp.a, sp.b, pc.dimension);
  rep.mass_minus = w * pc.f_minus.moment(sm.a, sm.b, pc.dimension);
  rep.normalized = std::abs(rep.mass_plus - 1.0) <= BalanceReport::tolerance &&
                   std::abs(rep.mass_minus - 1.0) <= BalanceReport::tolerance;
  return rep;
}

/// Unit-mass uniform densities on each side's support.
inline ProblemCase make_uniform_case(CaseKind kind, int n, double R1, double R2) {
  ProblemCase pc;
  pc.kind = kind;
  pc.dimension = n;
  pc.R1 = R1;
  pc.R2 = R2;
  // validate the geometry before building densities on it
  if (n < 2) throw geometry_error("dimension must be >= 2, got " + std::to_string(n));
  if (!(R1 > 0.0 && R2 > 0.0)) throw geometry_error("radii must be positive");
  if (kind == CaseKind::AnnulusOuterSource && !(R1 > R2))
    throw geometry_error("annulus with outer source requires R1 > R2 > 0");
  if (kind == CaseKind::AnnulusInnerSource && !(R2 > R1))
    throw geometry_error("annulus with inner source requires R2 > R1 > 0");
  const double w = surface_constant(n);
  auto unit = [&](Interval iv) {
    const double vol = w * (std::pow(iv.b, n) - std::pow(iv.a, n)) / n;
    return RadialDensity::uniform(1.0 / vol, iv);
  };
  pc.f_plus = unit(pc.expected_support(Side::Source));
  pc.f_minus = unit(pc.expected_support(Side::Sink));
  pc.validate();
  return pc;
}

}  // namespace kplap
