#pragma once

// Radial flux profiles theta_p(x) = profile(r) (x - center) solving div theta_p + f = 0.
//
// Every profile is stored through its enclosed form q(r) = r^n profile(r), which is a
// smooth function of the density moments: theta_r = q(r) / r^{n-1}.

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "kplap/canonical_duality.hpp"
#include "kplap/error.hpp"
#include "kplap/numerics.hpp"
#include "kplap/radial_model.hpp"

namespace kplap {

struct FluxField {
  CaseKind kind = CaseKind::DisjointBalls;
  Side side = Side::Source;
  int dimension = 2;
  Interval interval;
  /// C_p (source side) or D_p (sink side).
  double constant = 0.0;
  /// Exponent the constant was solved for; NaN for the p-independent disjoint fluxes.
  double p = std::numeric_limits<double>::quiet_NaN();
  /// r -> r^n profile(r).
  std::function<double(double)> enclosed;
  /// Interior zeros of the profile (at most one).
  std::vector<double> zeros;

  double profile(double r) const { return enclosed(r) / std::pow(r, dimension); }

  /// Signed radial component theta_r = profile(r) r, continuous at r = 0.
  double radial(double r) const {
    if (r == 0.0) return 0.0;
    return enclosed(r) / std::pow(r, dimension - 1);
  }
};

/// F~ (outer source) or G~ (inner source): cumulative mass scaled by the inner radius^-n.
struct CumulativeProfile {
  Interval interval;
  std::function<double(double)> fn;
  bool strictly_increasing = true;

  double operator()(double r) const { return fn(r); }

  double inverse(double y, double tol = 1e-15) const {
    if (y <= fn(interval.a)) return interval.a;
    if (y >= fn(interval.b)) return interval.b;
    numerics::BracketSpec br{interval.a, interval.b, tol * std::max(1.0, interval.b), 400};
    return numerics::find_root_monotone([&](double r) { return fn(r) - y; }, br);
  }
};

namespace detail {

inline void require_kind(const ProblemCase& pc, bool annulus, const char* op) {
  if (pc.is_annulus() != annulus)
    throw usage_error(std::string(op) + " does not apply to the " + to_string(pc.kind) + " geometry");
}

inline void require_unit_mass(const ProblemCase& pc, Side side) {
  const Interval s = pc.density(side).domain();
  const double mass = surface_constant(pc.dimension) * pc.density(side).moment(s.a, s.b, pc.dimension);
  if (std::abs(mass - 1.0) > BalanceReport::tolerance) {
    std::ostringstream os;
    os.precision(17);
    os << to_string(side) << " density has mass " << mass << ", the flux needs unit mass";
    throw balance_error(os.str());
  }
}

}  // namespace detail

/// F(r) = -Gamma(n/2) / (2 pi^{n/2} r^n) + int_r^{R1} f+ rho^{n-1} / r^n drho on (0, R1].
inline FluxField flux_disjoint_source(const ProblemCase& pc) {
  detail::require_kind(pc, false, "flux_disjoint_source");
  pc.validate();
  detail::require_unit_mass(pc, Side::Source);
  const int n = pc.dimension;
  FluxField fl;
  fl.kind = pc.kind;
  fl.side = Side::Source;
  fl.dimension = n;
  fl.interval = {0.0, pc.R1};
  fl.constant = -1.0 / (surface_constant(n) * std::pow(pc.R1, n));
  // Under unit mass R1^n C_p + int_r^{R1} = -int_0^r; the latter is free of cancellation.
  fl.enclosed = [f = pc.f_plus, n](double r) { return -f.moment(0.0, r, n); };
  return fl;
}

/// G(r) = Gamma(n/2) / (2 pi^{n/2} r^n) - int_r^{R2} f- rho^{n-1} / r^n drho on (0, R2].
inline FluxField flux_disjoint_sink(const ProblemCase& pc) {
  detail::require_kind(pc, false, "flux_disjoint_sink");
  pc.validate();
  detail::require_unit_mass(pc, Side::Sink);
  const int n = pc.dimension;
  FluxField fl;
  fl.kind = pc.kind;
  fl.side = Side::Sink;
  fl.dimension = n;
  fl.interval = {0.0, pc.R2};
  fl.constant = 1.0 / (surface_constant(n) * std::pow(pc.R2, n));
  fl.enclosed = [f = pc.f_minus, n](double r) { return f.moment(0.0, r, n); };
  return fl;
}

/// Working interval of an annulus case: [R2, R1] or [R1, R2].
inline Interval annulus_interval(const ProblemCase& pc) {
  return pc.kind == CaseKind::AnnulusOuterSource ? Interval{pc.R2, pc.R1} : Interval{pc.R1, pc.R2};
}

inline CumulativeProfile cumulative_profile(const ProblemCase& pc) {
  detail::require_kind(pc, true, "cumulative_profile");
  pc.validate();
  const int n = pc.dimension;
  const Interval iv = annulus_interval(pc);
  const RadialDensity& dens = pc.kind == CaseKind::AnnulusOuterSource ? pc.f_plus : pc.f_minus;
  CumulativeProfile cp;
  cp.interval = iv;
  const double scale = 1.0 / std::pow(iv.a, n);
  cp.fn = [dens, n, a = iv.a, scale](double r) { return scale * dens.moment(a, r, n); };
  constexpr int probes = 1024;
  double prev = cp.fn(iv.a);
  for (int i = 1; i < probes; ++i) {
    const double cur = cp.fn(iv.a + iv.length() * i / (probes - 1));
    if (!(cur > prev)) cp.strictly_increasing = false;
    prev = cur;
  }
  return cp;
}

namespace detail {

/// Enclosed flux of an annulus case for a trial boundary constant t.
inline std::function<double(double)> annulus_enclosed(const ProblemCase& pc, double t) {
  const int n = pc.dimension;
  if (pc.kind == CaseKind::AnnulusOuterSource)
    return [f = pc.f_plus, n, a = pc.R2, t](double r) { return t * std::pow(a, n) - f.moment(a, r, n); };
  return [f = pc.f_minus, n, a = pc.R1, t](double r) { return -t * std::pow(a, n) + f.moment(a, r, n); };
}

/// sign(theta_r) |theta_r|^{1/(p-1)}, the radial derivative of the potential.
inline double gradient_from_flux(double theta_r, double p) {
  if (theta_r == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(theta_r), 1.0 / (p - 1.0)), theta_r);
}

/// int over [a, b] of g, with a kink-type singularity at x0 in [a, b].
template <class Fn>
double integrate_split(Fn&& g, double a, double b, double x0, const numerics::QuadratureSpec& quad) {
  using numerics::GradedEnd;
  double acc = 0.0;
  if (x0 > a) acc += numerics::integrate_graded(g, a, std::min(x0, b), GradedEnd::Upper, quad);
  if (x0 < b) acc += numerics::integrate_graded(g, std::max(x0, a), b, GradedEnd::Lower, quad);
  return acc;
}

}  // namespace detail

inline numerics::QuadratureSpec default_constant_quadrature() {
  return {4097, numerics::Scheme::CompositeSimpson};
}

/// M_p(t) (outer source) or N_p(t) (inner source): the potential's value at the far end of
/// the annulus when the boundary constant is t. The sought constant is its zero.
inline double boundary_mismatch(const ProblemCase& pc, double p, double t,
                                const numerics::QuadratureSpec& quad = default_constant_quadrature()) {
  detail::require_kind(pc, true, "boundary_mismatch");
  duality::require_exponent(p);
  const int n = pc.dimension;
  const Interval iv = annulus_interval(pc);
  const CumulativeProfile cp = cumulative_profile(pc);
  const double crossing = cp.inverse(t);
  auto q = detail::annulus_enclosed(pc, t);
  auto g = [&](double r) { return detail::gradient_from_flux(q(r) / std::pow(r, n - 1), p); };
  return detail::integrate_split(g, iv.a, iv.b, crossing, quad);
}

/// C_p = M_p^{-1}(0) or D_p = N_p^{-1}(0), bracketed in (0, F~(R_outer)).
inline double solve_constant_annulus(const ProblemCase& pc, double p,
                                     const numerics::QuadratureSpec& quad = default_constant_quadrature(),
                                     double bracket_tol = 1e-12, bool verify_monotone = true) {
  detail::require_kind(pc, true, "solve_constant_annulus");
  duality::require_exponent(p);
  const CumulativeProfile cp = cumulative_profile(pc);
  if (!cp.strictly_increasing)
    throw domain_error("annulus density vanishes on a subinterval; the cumulative profile is not invertible");
  const double top = cp(cp.interval.b);
  const double eps = 1e-12 * top;
  // M_p increases in t, N_p decreases; orient both as increasing.
  const double orient = pc.kind == CaseKind::AnnulusOuterSource ? 1.0 : -1.0;
  auto fn = [&](double t) { return orient * boundary_mismatch(pc, p, t, quad); };

  if (verify_monotone) {
    constexpr int samples = 64;
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
      const double t = eps + (top - 2.0 * eps) * i / (samples - 1);
      const double v = fn(t);
      if (!(v > prev)) {
        std::ostringstream os;
        os.precision(17);
        os << "boundary mismatch is not strictly monotone near t = " << t;
        throw convergence_error(os.str());
      }
      prev = v;
    }
  }
  numerics::BracketSpec br{eps, top - eps, bracket_tol, 300};
  return numerics::find_root_monotone(fn, br);
}

inline FluxField flux_annulus(const ProblemCase& pc, double p,
                              const numerics::QuadratureSpec& quad = default_constant_quadrature(),
                              double bracket_tol = 1e-12) {
  detail::require_kind(pc, true, "flux_annulus");
  pc.validate();
  const double c = solve_constant_annulus(pc, p, quad, bracket_tol);
  FluxField fl;
  fl.kind = pc.kind;
  fl.side = pc.kind == CaseKind::AnnulusOuterSource ? Side::Source : Side::Sink;
  fl.dimension = pc.dimension;
  fl.interval = annulus_interval(pc);
  fl.constant = c;
  fl.p = p;
  fl.enclosed = detail::annulus_enclosed(pc, c);
  fl.zeros.push_back(cumulative_profile(pc).inverse(c));
  return fl;
}

/// The flux carrying the nontrivial potential on a side of the case.
inline FluxField flux_for_side(const ProblemCase& pc, Side side, double p,
                               const numerics::QuadratureSpec& quad = default_constant_quadrature(),
                               double bracket_tol = 1e-12) {
  if (!pc.is_annulus()) return side == Side::Source ? flux_disjoint_source(pc) : flux_disjoint_sink(pc);
  return flux_annulus(pc, p, quad, bracket_tol);
}

}  // namespace kplap
