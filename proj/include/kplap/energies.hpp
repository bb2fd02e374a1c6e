#pragma once

// Primal, dual and total complementary energies, the Kantorovich functional, and the
// second-variation sign probes, all as radial quadratures with weight omega_n r^{n-1}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "kplap/canonical_duality.hpp"
#include "kplap/error.hpp"
#include "kplap/flux_field.hpp"
#include "kplap/numerics.hpp"
#include "kplap/potential.hpp"
#include "kplap/radial_model.hpp"

namespace kplap {

struct EnergyReport {
  double p = 0.0;
  double K = 0.0;
  double I_p = 0.0;
  double Xi = 0.0;
  double I_d = 0.0;
  double gap_abs = 0.0;
  double gap_rel = 0.0;
  double second_var_primal_min = 0.0;
  double second_var_dual_max = 0.0;
};

namespace detail {

/// Simpson weights times omega_n r^{n-1} on a uniform grid.
inline std::vector<double> radial_weights(std::span<const double> grid, int dim) {
  const double h = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
  std::vector<double> w = numerics::grid_weights(grid.size(), h);
  const double omega = surface_constant(dim);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= omega * std::pow(grid[i], dim - 1);
  return w;
}

inline void require_same_grid(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw usage_error("grid mismatch: sizes differ");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) throw usage_error("grid mismatch: nodes differ");
}

}  // namespace detail

/// int (|u'|^p / p - u f) dx for grid samples of u and u' on one side.
inline double primal_energy(std::span<const double> grid, std::span<const double> values,
                            std::span<const double> derivative, const ProblemCase& pc, Side side, double p) {
  duality::require_exponent(p);
  if (values.size() != grid.size() || derivative.size() != grid.size())
    throw usage_error("grid mismatch: sample sizes differ from the grid");
  const auto w = detail::radial_weights(grid, pc.dimension);
  numerics::CompensatedSum acc;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double density = std::pow(std::abs(derivative[i]), p) / p - values[i] * pc.signed_density(side, grid[i]);
    acc.add(w[i] * density);
  }
  return acc.value();
}

inline double primal_energy(const RadialPotential& pot, const ProblemCase& pc, double p) {
  return primal_energy(pot.grid, pot.values, pot.derivative, pc, pot.side, p);
}

/// Kantorovich functional int w f dx summed over the given sides.
inline double kantorovich_value(const ProblemCase& pc, std::span<const RadialPotential> pots) {
  numerics::CompensatedSum acc;
  for (const RadialPotential& pot : pots) {
    const auto w = detail::radial_weights(pot.grid, pc.dimension);
    for (std::size_t i = 0; i < pot.size(); ++i) acc.add(w[i] * pot.values[i] * pc.signed_density(pot.side, pot.grid[i]));
  }
  return acc.value();
}

inline double kantorovich_value(const RadialPotential& source, const RadialPotential& sink, const ProblemCase& pc) {
  if (pc.is_annulus()) throw usage_error("annulus cases carry a single potential");
  if (source.side != Side::Source || sink.side != Side::Sink) throw usage_error("potentials passed in the wrong order");
  const RadialPotential pots[] = {source, sink};
  return kantorovich_value(pc, pots);
}

namespace detail {

/// psi_* continued past zeta = 1/2 for inadmissible fluxes.
inline double psi_star_extended(double zeta, double p) {
  if (zeta <= 0.5) return duality::psi_star(zeta, p);
  return (1.0 - 2.0 / p) * std::pow(2.0, 2.0 / (p - 2.0)) * std::pow(zeta, p / (p - 2.0));
}

/// |theta|^2 / (4 zeta) + psi_*(zeta), with the 0/0 limit at joint zeros.
inline double dual_density(double theta_r, double zeta, double p) {
  const double th2 = theta_r * theta_r;
  double first = 0.0;
  if (zeta > 0.0) {
    first = th2 / (4.0 * zeta);
  } else if (th2 != 0.0) {
    throw domain_error("inconsistent critical pair: zeta = 0 where theta != 0");
  }
  return first + psi_star_extended(zeta, p);
}

}  // namespace detail

/// Pure complementary energy at the critical zeta obtained from the flux via the DAE.
inline double dual_energy(const FluxField& flux, double p, const ProblemCase& pc,
                          const numerics::QuadratureSpec& quad = numerics::QuadratureSpec::production()) {
  duality::require_exponent(p);
  auto density = [&](double r) {
    const double th = flux.radial(r);
    const auto s = duality::solve_dae(th * th, p);
    return detail::dual_density(th, s.zeta, p) * surface_constant(pc.dimension) * std::pow(r, pc.dimension - 1);
  };
  return -numerics::integrate(density, flux.interval.a, flux.interval.b, quad);
}

/// zeta_bar = lambda_p / 2 at every node of a potential.
inline std::vector<double> critical_zeta(const RadialPotential& pot) {
  std::vector<double> z(pot.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = 0.5 * pot.lambda[i];
  return z;
}

/// Xi(u, zeta) = int (|u'|^2 zeta - psi_*(zeta) - f u) dx.
inline double total_complementary_energy(const RadialPotential& pot, std::span<const double> zeta,
                                         const ProblemCase& pc, double p) {
  duality::require_exponent(p);
  if (zeta.size() != pot.size()) throw usage_error("grid mismatch: zeta field size differs from the potential grid");
  const auto w = detail::radial_weights(pot.grid, pc.dimension);
  numerics::CompensatedSum acc;
  for (std::size_t i = 0; i < pot.size(); ++i) {
    const double du = pot.derivative[i];
    const double z = zeta[i];
    acc.add(w[i] * (du * du * z - detail::psi_star_extended(z, p) - pc.signed_density(pot.side, pot.grid[i]) * pot.values[i]));
  }
  return acc.value();
}

enum class TestFunctionKind { SmoothBump, RandomFourier };

/// Variation direction on a grid, vanishing at both interval ends.
struct TestFunction {
  TestFunctionKind kind = TestFunctionKind::SmoothBump;
  std::uint64_t seed = 0;
  int modes = 0;
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> derivative;
};

namespace detail {

inline void normalize_energy(TestFunction& tf, int dim) {
  const auto w = radial_weights(tf.grid, dim);
  double e = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) e += w[i] * tf.derivative[i] * tf.derivative[i];
  if (e > 0.0) {
    const double s = 1.0 / std::sqrt(e);
    for (double& v : tf.values) v *= s;
    for (double& v : tf.derivative) v *= s;
  }
}

}  // namespace detail

/// sin^2(pi (r - a) / L), scaled to unit discrete energy norm int |phi'|^2 dx = 1.
inline TestFunction make_smooth_bump(std::span<const double> grid, int dim) {
  TestFunction tf;
  tf.kind = TestFunctionKind::SmoothBump;
  tf.grid.assign(grid.begin(), grid.end());
  const double a = grid.front();
  const double len = grid.back() - a;
  for (double r : grid) {
    const double s = std::numbers::pi * (r - a) / len;
    tf.values.push_back(std::sin(s) * std::sin(s));
    tf.derivative.push_back(std::numbers::pi / len * std::sin(2.0 * s));
  }
  tf.values.front() = 0.0;
  tf.values.back() = 0.0;
  detail::normalize_energy(tf, dim);
  return tf;
}

/// sum_k c_k sin(k pi (r - a) / L), c_k ~ N(0, 1) / k, unit discrete energy norm.
inline TestFunction make_random_fourier(std::span<const double> grid, int dim, std::uint64_t seed, int modes) {
  if (modes < 1) throw usage_error("random Fourier test function needs at least one mode");
  TestFunction tf;
  tf.kind = TestFunctionKind::RandomFourier;
  tf.seed = seed;
  tf.modes = modes;
  tf.grid.assign(grid.begin(), grid.end());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> c(modes);
  for (int k = 0; k < modes; ++k) c[k] = gauss(rng) / (k + 1);
  const double a = grid.front();
  const double len = grid.back() - a;
  for (double r : grid) {
    double v = 0.0;
    double d = 0.0;
    for (int k = 0; k < modes; ++k) {
      const double w = (k + 1) * std::numbers::pi / len;
      v += c[k] * std::sin(w * (r - a));
      d += c[k] * w * std::cos(w * (r - a));
    }
    tf.values.push_back(v);
    tf.derivative.push_back(d);
  }
  tf.values.front() = 0.0;
  tf.values.back() = 0.0;
  detail::normalize_energy(tf, dim);
  return tf;
}

/// int |u'|^{p-2} |phi'|^2 + (p-2) |u'|^{p-4} (u' phi')^2 dx.
inline double second_variation_primal(const RadialPotential& pot, const TestFunction& phi, const ProblemCase& pc,
                                      double p) {
  duality::require_exponent(p);
  detail::require_same_grid(pot.grid, phi.grid);
  if (phi.values.front() != 0.0 || phi.values.back() != 0.0)
    throw usage_error("test function must vanish at the interval endpoints");
  const auto w = detail::radial_weights(pot.grid, pc.dimension);
  numerics::CompensatedSum acc;
  for (std::size_t i = 0; i < pot.size(); ++i) {
    const double du = pot.derivative[i];
    const double dphi = phi.derivative[i];
    const double g = std::abs(du);
    if (g == 0.0) continue;
    // |u'|^{p-4} (u' phi')^2 = |u'|^{p-2} phi'^2 in one dimension; avoids 0 * inf for p < 4
    const double first = std::pow(g, p - 2.0) * dphi * dphi;
    const double second = (p - 2.0) * std::pow(g, p - 2.0) * dphi * dphi;
    acc.add(w[i] * (first + second));
  }
  return acc.value();
}

struct DualSecondVariation {
  double value = 0.0;
  std::size_t masked_nodes = 0;
  /// Set when the test function's support falls entirely on masked nodes.
  bool excluded_region_warning = false;
};

/// -int psi^2 (|theta|^2 / (2 zeta^3) + 2^{p/(p-2)} zeta^{(4-p)/(p-2)} / (p-2)) dx over nodes
/// with zeta_bar > 0.
inline DualSecondVariation second_variation_dual(const FluxField& flux, const TestFunction& psi, double p,
                                                 const ProblemCase& pc) {
  duality::require_exponent(p);
  bool any = false;
  for (double v : psi.values) any = any || v != 0.0;
  if (!any) throw usage_error("dual test function is identically zero");
  const auto w = detail::radial_weights(psi.grid, pc.dimension);
  DualSecondVariation out;
  numerics::CompensatedSum acc;
  bool supported = false;
  for (std::size_t i = 0; i < psi.grid.size(); ++i) {
    const double th = flux.radial(psi.grid[i]);
    const double zeta = 0.5 * duality::solve_dae(th * th, p).lambda;
    if (!(zeta > 0.0)) {
      ++out.masked_nodes;
      continue;
    }
    if (psi.values[i] != 0.0) supported = true;
    const double bracket = th * th / (2.0 * zeta * zeta * zeta) +
                           std::pow(2.0, p / (p - 2.0)) * std::pow(zeta, (4.0 - p) / (p - 2.0)) / (p - 2.0);
    acc.add(-w[i] * psi.values[i] * psi.values[i] * bracket);
  }
  out.value = acc.value();
  out.excluded_region_warning = !supported;
  return out;
}

struct EnergyOptions {
  numerics::QuadratureSpec dual_quadrature = numerics::QuadratureSpec::production();
  int random_test_functions = 32;
  int fourier_modes = 8;
  std::uint64_t seed = 20240611;
};

/// Energies of a solved case; the two-ball case sums over both balls.
inline EnergyReport energy_report(const Solution& sol, const EnergyOptions& opt = {}) {
  const ProblemCase& pc = sol.problem;
  const double p = sol.p;
  EnergyReport rep;
  rep.p = p;
  std::vector<RadialPotential> pots;
  rep.second_var_primal_min = std::numeric_limits<double>::infinity();
  rep.second_var_dual_max = -std::numeric_limits<double>::infinity();
  for (const SideSolution& s : sol.sides) {
    const RadialPotential& pot = s.potential;
    pots.push_back(pot);
    rep.I_p += primal_energy(pot, pc, p);
    rep.Xi += total_complementary_energy(pot, critical_zeta(pot), pc, p);
    rep.I_d += dual_energy(s.flux, p, pc, opt.dual_quadrature);

    std::vector<TestFunction> tests{make_smooth_bump(pot.grid, pc.dimension)};
    for (int k = 0; k < opt.random_test_functions; ++k)
      tests.push_back(make_random_fourier(pot.grid, pc.dimension, opt.seed + 7919u * k, opt.fourier_modes));
    for (const TestFunction& tf : tests) {
      rep.second_var_primal_min = std::min(rep.second_var_primal_min, second_variation_primal(pot, tf, pc, p));
      rep.second_var_dual_max = std::max(rep.second_var_dual_max, second_variation_dual(s.flux, tf, p, pc).value);
    }
  }
  rep.K = kantorovich_value(pc, pots);
  rep.gap_abs = std::abs(rep.I_p - rep.I_d);
  rep.gap_rel = rep.gap_abs / std::max(1.0, std::abs(rep.I_p));
  return rep;
}

}  // namespace kplap
