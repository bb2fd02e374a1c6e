#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kplap/energies.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace kplap;
using std::numbers::pi;

namespace {

ProblemCase disjoint() { return make_uniform_case(CaseKind::DisjointBalls, 2, 1.0, 1.0); }
ProblemCase outer() { return make_uniform_case(CaseKind::AnnulusOuterSource, 2, 2.0, 1.0); }
ProblemCase inner() { return make_uniform_case(CaseKind::AnnulusInnerSource, 2, 1.0, 2.0); }

/// Closed-form energy of the uniform two-ball fixture: testing the EL equation with u
/// gives int |u'|^p = int u f, so I_p = -(1 - 1/p) K per ball.
double uniform_disjoint_energy(double p) { return -(1.0 - 1.0 / p) * 2.0 * oracle::UniformBall{2, 1.0, p}.kantorovich(); }

}  // namespace

TEST(DualDensity, NodeExample) {
  EXPECT_NEAR(detail::dual_density(std::sqrt(0.125), 0.25, 4.0), 0.1875, 1e-15);
  const auto s = duality::solve_dae(0.125, 4.0);
  EXPECT_NEAR(detail::dual_density(std::sqrt(0.125), s.zeta, 4.0), 0.1875, 1e-15);
}

TEST(DualDensity, JointZeroContributesNothing) {
  EXPECT_EQ(detail::dual_density(0.0, 0.0, 4.0), 0.0);
  EXPECT_THROW(detail::dual_density(0.1, 0.0, 4.0), domain_error);
}

TEST(Kantorovich, ZeroPotential) {
  const ProblemCase pc = disjoint();
  Solution sol = solve(pc, 4.0, {513});
  RadialPotential a = sol.sides[0].potential, b = sol.sides[1].potential;
  std::fill(a.values.begin(), a.values.end(), 0.0);
  std::fill(b.values.begin(), b.values.end(), 0.0);
  EXPECT_EQ(kantorovich_value(a, b, pc), 0.0);
  EXPECT_THROW(kantorovich_value(b, a, pc), usage_error);
}

TEST(Kantorovich, ClosedFormAtP256) {
  const ProblemCase pc = disjoint();
  const Solution sol = solve(pc, 256.0);
  const double K = kantorovich_value(sol.sides[0].potential, sol.sides[1].potential, pc);
  const double exact = 2.0 * oracle::UniformBall{2, 1.0, 256.0}.kantorovich();
  EXPECT_NEAR(K, exact, 1e-8);
  EXPECT_NEAR(K, 0.6611, 0.002);
  // same value written as 4 (p-1)/p (1/(2 pi))^{1/(p-1)} q / (2 (q + 2))
  const double p = 256.0, q = p / (p - 1.0);
  EXPECT_NEAR(exact, 4.0 * (p - 1.0) / p * std::pow(1.0 / (2.0 * pi), 1.0 / (p - 1.0)) * q / (2.0 * (q + 2.0)), 1e-14);
}

TEST(PrimalEnergy, ZeroFunction) {
  const ProblemCase pc = disjoint();
  const auto grid = numerics::linspace(0.0, 1.0, 257);
  const std::vector<double> zero(257, 0.0);
  EXPECT_EQ(primal_energy(grid, zero, zero, pc, Side::Source, 4.0), 0.0);
  const std::vector<double> shorter(256, 0.0);
  EXPECT_THROW(primal_energy(grid, shorter, zero, pc, Side::Source, 4.0), usage_error);
}

TEST(PrimalEnergy, ClosedFormOnUniformBalls) {
  const ProblemCase pc = disjoint();
  for (double p : {3.0, 4.0, 8.0}) {
    const Solution sol = solve(pc, p);
    const double I = primal_energy(sol.sides[0].potential, pc, p) + primal_energy(sol.sides[1].potential, pc, p);
    EXPECT_NEAR(I, uniform_disjoint_energy(p), 1e-9) << "p=" << p;
  }
}

TEST(DualEnergy, MatchesPrimalOnAllFixtures) {
  for (const ProblemCase& pc : {disjoint(), outer(), inner()}) {
    for (double p : {3.0, 4.0, 8.0}) {
      const Solution sol = solve(pc, p);
      EnergyOptions opt;
      opt.random_test_functions = 4;
      const EnergyReport rep = energy_report(sol, opt);
      EXPECT_LE(rep.gap_rel, 1e-6) << to_string(pc.kind) << " p=" << p;
      const double tol = 1e-6 * std::max(1.0, std::abs(rep.I_p));
      EXPECT_GE(rep.Xi, std::min(rep.I_p, rep.I_d) - tol);
      EXPECT_LE(rep.Xi, std::max(rep.I_p, rep.I_d) + tol);
    }
  }
}

TEST(TotalComplementary, ZeroPair) {
  const ProblemCase pc = disjoint();
  RadialPotential pot = solve(pc, 4.0, {257}).sides[0].potential;
  std::fill(pot.values.begin(), pot.values.end(), 0.0);
  std::fill(pot.derivative.begin(), pot.derivative.end(), 0.0);
  const std::vector<double> zeta(pot.size(), 0.0);
  EXPECT_EQ(total_complementary_energy(pot, zeta, pc, 4.0), 0.0);
  EXPECT_THROW(total_complementary_energy(pot, std::vector<double>(3, 0.0), pc, 4.0), usage_error);
}

TEST(TotalComplementary, CriticalZetaMaximizes) {
  for (const ProblemCase& pc : {disjoint(), outer()}) {
    const Solution sol = solve(pc, 4.0);
    for (const auto& s : sol.sides) {
      const auto z = critical_zeta(s.potential);
      const double base = total_complementary_energy(s.potential, z, pc, 4.0);
      auto bumped = z;
      for (double& v : bumped) v = std::min(0.5, v + 0.01);
      EXPECT_LE(total_complementary_energy(s.potential, bumped, pc, 4.0), base + 1e-12);
      auto lowered = z;
      for (double& v : lowered) v = std::max(0.0, v - 0.01);
      EXPECT_LE(total_complementary_energy(s.potential, lowered, pc, 4.0), base + 1e-12);
    }
  }
}

TEST(PrimalEnergy, LocalMinimalityProbe) {
  for (const ProblemCase& pc : {disjoint(), outer(), inner()}) {
    const Solution sol = solve(pc, 4.0, {2049});
    for (const auto& s : sol.sides) {
      const RadialPotential& pot = s.potential;
      const double base = primal_energy(pot, pc, 4.0);
      for (int k = 0; k < 16; ++k) {
        TestFunction phi = make_random_fourier(pot.grid, pc.dimension, 9000 + k, 6);
        double g = 0.0;
        for (double d : phi.derivative) g = std::max(g, std::abs(d));
        for (double eps : {1e-2, 1e-3}) {
          // scaled so that |grad(u + eps phi)| stays below 1
          const double s_eps = eps / g;
          std::vector<double> v(pot.size()), d(pot.size());
          for (std::size_t i = 0; i < pot.size(); ++i) {
            v[i] = pot.values[i] + s_eps * phi.values[i];
            d[i] = pot.derivative[i] + s_eps * phi.derivative[i];
          }
          EXPECT_LE(base, primal_energy(pot.grid, v, d, pc, pot.side, 4.0) + 1e-12)
              << to_string(pc.kind) << " k=" << k << " eps=" << eps;
        }
      }
    }
  }
}

TEST(SecondVariation, SignsOnUniformFixture) {
  const ProblemCase pc = disjoint();
  const Solution sol = solve(pc, 4.0);
  for (const auto& s : sol.sides) {
    const TestFunction bump = make_smooth_bump(s.potential.grid, 2);
    EXPECT_GT(second_variation_primal(s.potential, bump, pc, 4.0), 0.0);
    EXPECT_LT(second_variation_dual(s.flux, bump, 4.0, pc).value, 0.0);
    for (int k = 0; k < 32; ++k) {
      const TestFunction tf = make_random_fourier(s.potential.grid, 2, 77 + k, 8);
      ASSERT_GT(second_variation_primal(s.potential, tf, pc, 4.0), 0.0) << k;
      const auto dv = second_variation_dual(s.flux, tf, 4.0, pc);
      ASSERT_LT(dv.value, 0.0) << k;
      ASSERT_FALSE(dv.excluded_region_warning);
    }
  }
}

TEST(SecondVariation, Preconditions) {
  const ProblemCase pc = disjoint();
  const Solution sol = solve(pc, 4.0, {257});
  const RadialPotential& pot = sol.sides[0].potential;

  TestFunction flat = make_smooth_bump(pot.grid, 2);
  std::fill(flat.values.begin(), flat.values.end(), 0.0);
  std::fill(flat.derivative.begin(), flat.derivative.end(), 0.0);
  EXPECT_EQ(second_variation_primal(pot, flat, pc, 4.0), 0.0);
  EXPECT_THROW(second_variation_dual(sol.sides[0].flux, flat, 4.0, pc), usage_error);

  TestFunction open = make_smooth_bump(pot.grid, 2);
  open.values.back() = 0.1;
  EXPECT_THROW(second_variation_primal(pot, open, pc, 4.0), usage_error);

  TestFunction other = make_smooth_bump(numerics::linspace(0.0, 1.0, 129), 2);
  EXPECT_THROW(second_variation_primal(pot, other, pc, 4.0), usage_error);

  // supported only at r = 0, where theta vanishes
  TestFunction center = flat;
  center.values.front() = 1.0;
  const auto dv = second_variation_dual(sol.sides[0].flux, center, 4.0, pc);
  EXPECT_TRUE(dv.excluded_region_warning);
  EXPECT_GE(dv.masked_nodes, 1u);
}

TEST(SecondVariationProperty, SignsAcrossRandomCases) {
  gen::Source src(601);
  for (int t = 0; t < gen::trials; ++t) {
    const int n = src.integer(2, 4);
    ProblemCase pc = make_uniform_case(CaseKind::DisjointBalls, n, src.uniform(0.5, 2.0), src.uniform(0.5, 2.0));
    const double p = src.exponent();
    const Side side = src.integer(0, 1) ? Side::Source : Side::Sink;
    const FluxField fl = side == Side::Source ? flux_disjoint_source(pc) : flux_disjoint_sink(pc);
    const RadialPotential pot = build_potential(fl, p, 129);
    const TestFunction tf = make_random_fourier(pot.grid, n, src.seed(), src.integer(1, 8));
    ASSERT_GT(second_variation_primal(pot, tf, pc, p), 0.0) << "trial " << t << " p=" << p;
    ASSERT_LT(second_variation_dual(fl, tf, p, pc).value, 0.0) << "trial " << t << " p=" << p;
  }
}

TEST(PrimalEnergy, MinusEnergyIncreasesTowardKantorovichLimit) {
  const ProblemCase pc = disjoint();
  double prev = -INFINITY;
  int slips = 0;
  for (double p : {3.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0}) {
    const Solution sol = solve(pc, p, {2049});
    const double minus_I = -(primal_energy(sol.sides[0].potential, pc, p) + primal_energy(sol.sides[1].potential, pc, p));
    if (minus_I < prev) {
      ++slips;
      EXPECT_LE(prev - minus_I, 1e-9);
    }
    EXPECT_LE(minus_I, 2.0 / 3.0 + 1e-9);
    prev = minus_I;
  }
  EXPECT_LE(slips, 1);
  EXPECT_NEAR(prev, -uniform_disjoint_energy(256.0), 1e-8);
}
