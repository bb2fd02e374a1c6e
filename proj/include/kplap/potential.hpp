#pragma once

// Reconstruction of the radial minimizer u_p from its flux, with derivative,
// admissibility and Euler-Lagrange residual diagnostics.
//
// u_p'(r) = theta_r / lambda_p = sign(theta_r) |theta_r|^{1/(p-1)}; the quotient form is
// never evaluated.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "kplap/canonical_duality.hpp"
#include "kplap/error.hpp"
#include "kplap/flux_field.hpp"
#include "kplap/numerics.hpp"
#include "kplap/radial_model.hpp"

namespace kplap {

enum class SideTag { SourceBall, SinkBall, Annulus };

inline const char* to_string(SideTag t) {
  switch (t) {
    case SideTag::SourceBall: return "source-ball";
    case SideTag::SinkBall: return "sink-ball";
    case SideTag::Annulus: return "annulus";
  }
  return "?";
}

struct RadialPotential {
  double p = 0.0;
  Interval interval;
  SideTag tag = SideTag::SourceBall;
  Side side = Side::Source;
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> derivative;
  std::vector<double> lambda;
  std::vector<double> theta_r;
  /// Interior flux zeros carried over from the flux.
  std::vector<double> zeros;
  /// Set when |theta_r| > 1 somewhere, i.e. lambda_p > 1 and |u'| > 1.
  bool admissibility_warning = false;

  std::size_t size() const { return grid.size(); }
  double spacing() const { return (interval.b - interval.a) / static_cast<double>(grid.size() - 1); }
};

/// Exact radial derivative of u_p at an arbitrary radius.
inline double gradient_at(const FluxField& flux, double p, double r) {
  return detail::gradient_from_flux(flux.radial(r), p);
}

namespace detail {

inline bool near(double x, double y, double scale) { return std::abs(x - y) <= 1e-14 * scale; }

/// int_a^b u' over one grid cell, split and graded at flux zeros and at r = 0.
inline double cell_integral(const FluxField& flux, double p, double a, double b) {
  using numerics::GradedEnd;
  static const numerics::QuadratureSpec smooth{20, numerics::Scheme::GaussLegendreComposite};
  static const numerics::QuadratureSpec graded{60, numerics::Scheme::GaussLegendreComposite};
  auto g = [&](double r) { return gradient_at(flux, p, r); };
  const double scale = std::max(1.0, flux.interval.b);

  std::vector<double> singular;
  if (flux.kind == CaseKind::DisjointBalls) singular.push_back(0.0);
  for (double z : flux.zeros) singular.push_back(z);

  for (double z : singular) {
    if (z > a && z < b && !near(z, a, scale) && !near(z, b, scale)) {
      return numerics::integrate_graded(g, a, z, GradedEnd::Upper, graded) +
             numerics::integrate_graded(g, z, b, GradedEnd::Lower, graded);
    }
  }
  for (double z : singular) {
    if (near(z, a, scale)) return numerics::integrate_graded(g, a, b, GradedEnd::Lower, graded);
    if (near(z, b, scale)) return numerics::integrate_graded(g, a, b, GradedEnd::Upper, graded);
  }
  return numerics::integrate(g, a, b, smooth);
}

}  // namespace detail

/// u_p on a uniform grid of grid_size nodes over the flux interval. Anchored at the
/// outer radius for balls and at the inner radius for annuli, where u_p = 0.
inline RadialPotential build_potential(const FluxField& flux, double p, std::size_t grid_size) {
  duality::require_exponent(p);
  if (grid_size < 64) throw usage_error("build_potential needs grid_size >= 64");
  if (flux.kind != CaseKind::DisjointBalls && !(std::abs(flux.p - p) <= 1e-12 * p))
    throw usage_error("annulus flux was solved for a different exponent");

  RadialPotential pot;
  pot.p = p;
  pot.interval = flux.interval;
  pot.side = flux.side;
  pot.tag = flux.kind != CaseKind::DisjointBalls ? SideTag::Annulus
            : flux.side == Side::Source          ? SideTag::SourceBall
                                                 : SideTag::SinkBall;
  pot.zeros = flux.zeros;
  pot.grid = numerics::linspace(flux.interval.a, flux.interval.b, grid_size);
  const std::size_t n = grid_size;
  pot.values.assign(n, 0.0);
  pot.derivative.resize(n);
  pot.lambda.resize(n);
  pot.theta_r.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const double th = flux.radial(pot.grid[i]);
    pot.theta_r[i] = th;
    pot.derivative[i] = detail::gradient_from_flux(th, p);
    const auto dual = duality::solve_dae(th * th, p);
    pot.lambda[i] = dual.lambda;
    if (!dual.admissible) pot.admissibility_warning = true;
  }

  std::vector<double> cells(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) cells[i] = detail::cell_integral(flux, p, pot.grid[i], pot.grid[i + 1]);

  numerics::CompensatedSum acc;
  if (pot.tag == SideTag::Annulus) {
    for (std::size_t i = 1; i < n; ++i) {
      acc.add(cells[i - 1]);
      pot.values[i] = acc.value();
    }
  } else {
    for (std::size_t i = n - 1; i-- > 0;) {
      acc.add(-cells[i]);
      pot.values[i] = acc.value();
    }
  }
  return pot;
}

/// Value of u_p at the boundary radius opposite its anchor (annulus) or at the anchor (balls).
inline double boundary_defect(const RadialPotential& pot) {
  if (pot.tag == SideTag::Annulus) return std::max(std::abs(pot.values.front()), std::abs(pot.values.back()));
  return std::abs(pot.values.back());
}

struct ELResidualReport {
  double max_residual = 0.0;
  /// Per-node residual; NaN where the stencil is excluded.
  std::vector<double> residual;
  /// Centers of the excluded neighborhoods (r = 0 and flux zeros).
  std::vector<double> excluded_neighborhoods;
  double exclusion_radius = 0.0;
  std::size_t evaluated_nodes = 0;
};

/// Radial p-Laplace residual (r^{n-1} |u'|^{p-2} u')' + f r^{n-1}, expanded as
/// (n-1) r^{n-2} |u'|^{p-2} u' + (p-1) r^{n-1} |u'|^{p-2} u'' + f r^{n-1}, with second
/// order central differences of the grid values. Nodes within max(3 h, 5% of the
/// interval) of r = 0 or of a flux zero are skipped: u_p is not C^2 there.
inline ELResidualReport el_residual(const RadialPotential& pot, const ProblemCase& pc, double p,
                                    double exclusion_fraction = 0.05) {
  duality::require_exponent(p);
  const std::size_t n = pot.size();
  if (n < 256) throw usage_error("el_residual needs at least 256 grid nodes");
  const double h = pot.spacing();
  const int dim = pc.dimension;

  ELResidualReport rep;
  rep.residual.assign(n, std::numeric_limits<double>::quiet_NaN());
  if (pot.tag != SideTag::Annulus) rep.excluded_neighborhoods.push_back(0.0);
  for (double z : pot.zeros) rep.excluded_neighborhoods.push_back(z);
  rep.exclusion_radius = std::max(3.0 * h, exclusion_fraction * pot.interval.length());

  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double r = pot.grid[i];
    bool skip = false;
    for (double z : rep.excluded_neighborhoods)
      if (std::abs(r - z) <= rep.exclusion_radius) skip = true;
    if (skip) continue;
    const double d1 = (pot.values[i + 1] - pot.values[i - 1]) / (2.0 * h);
    const double d2 = (pot.values[i + 1] - 2.0 * pot.values[i] + pot.values[i - 1]) / (h * h);
    const double mag = std::pow(std::abs(d1), p - 2.0);
    const double res = (dim - 1) * std::pow(r, dim - 2) * mag * d1 + (p - 1.0) * std::pow(r, dim - 1) * mag * d2 +
                       pc.signed_density(pot.side, r) * std::pow(r, dim - 1);
    rep.residual[i] = res;
    rep.max_residual = std::max(rep.max_residual, std::abs(res));
    ++rep.evaluated_nodes;
  }
  return rep;
}

struct AdmissibilityReport {
  double sup_grad = 0.0;
  bool is_admissible = true;

  static constexpr double tolerance = 1e-9;
};

inline AdmissibilityReport admissibility_report(const RadialPotential& pot) {
  AdmissibilityReport rep;
  for (double d : pot.derivative) rep.sup_grad = std::max(rep.sup_grad, std::abs(d));
  rep.is_admissible = rep.sup_grad <= 1.0 + AdmissibilityReport::tolerance;
  return rep;
}

struct SolveOptions {
  std::size_t grid_size = 4097;
  numerics::QuadratureSpec constant_quadrature = default_constant_quadrature();
  double root_tol = 1e-12;
};

struct SideSolution {
  FluxField flux;
  RadialPotential potential;
};

/// Fluxes and potentials on every active side of a case for one exponent.
struct Solution {
  ProblemCase problem;
  double p = 0.0;
  std::vector<SideSolution> sides;
};

inline Solution solve(const ProblemCase& pc, double p, const SolveOptions& opt = {}) {
  duality::require_exponent(p);
  pc.validate();
  Solution sol{pc, p, {}};
  if (pc.is_annulus()) {
    FluxField fl = flux_annulus(pc, p, opt.constant_quadrature, opt.root_tol);
    RadialPotential pot = build_potential(fl, p, opt.grid_size);
    sol.sides.push_back({std::move(fl), std::move(pot)});
    return sol;
  }
  for (Side s : pc.active_sides()) {
    FluxField fl = flux_for_side(pc, s, p);
    RadialPotential pot = build_potential(fl, p, opt.grid_size);
    sol.sides.push_back({std::move(fl), std::move(pot)});
  }
  return sol;
}

}  // namespace kplap
