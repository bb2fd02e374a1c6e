#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>

#include "kplap/convergence_suite.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace kplap;
using std::numbers::pi;

namespace {

ProblemCase disjoint() { return make_uniform_case(CaseKind::DisjointBalls, 2, 1.0, 1.0); }
ProblemCase outer() { return make_uniform_case(CaseKind::AnnulusOuterSource, 2, 2.0, 1.0); }
ProblemCase inner() { return make_uniform_case(CaseKind::AnnulusInnerSource, 2, 1.0, 2.0); }

SweepOptions fast() {
  SweepOptions o;
  o.skip_energies = true;
  return o;
}

const SweepResult& disjoint_sweep() {
  static const SweepResult res = run_sweep(disjoint(), default_sweep_exponents(), 1025, fast());
  return res;
}

const SweepResult& outer_sweep() {
  static const SweepResult res = run_sweep(outer(), default_sweep_exponents(), 1025, fast());
  return res;
}

}  // namespace

TEST(LimitPotential, Ramps) {
  const ProblemCase pc = disjoint();
  const RadialPotential s = limit_potential(pc, Side::Source, 101);
  const RadialPotential k = limit_potential(pc, Side::Sink, 101);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_NEAR(s.values[i], 1.0 - s.grid[i], 1e-15);
    EXPECT_NEAR(k.values[i], k.grid[i] - 1.0, 1e-15);
    EXPECT_EQ(s.derivative[i], -1.0);
    EXPECT_EQ(k.derivative[i], 1.0);
  }
}

TEST(LimitPotential, AnnulusTent) {
  const RadialPotential t = limit_potential(outer(), Side::Source, 201);
  ASSERT_EQ(t.zeros.size(), 1u);
  EXPECT_EQ(t.zeros[0], 1.5);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(t.values[i], 0.5 - std::abs(t.grid[i] - 1.5), 1e-15);
  EXPECT_EQ(t.values.front(), 0.0);
  EXPECT_NEAR(t.values.back(), 0.0, 1e-15);

  const RadialPotential m = limit_potential(inner(), Side::Sink, 201);
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NEAR(m.values[i], std::abs(m.grid[i] - 1.5) - 0.5, 1e-15);

  EXPECT_THROW(limit_potential(outer(), Side::Sink, 201), usage_error);
  EXPECT_THROW(limit_potential(outer(), Side::Source, 201, 2.5), domain_error);
}

TEST(KantorovichLimit, UniformDisjoint) {
  EXPECT_NEAR(kantorovich_limit_value(disjoint()), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(kantorovich_limit_value(make_uniform_case(CaseKind::DisjointBalls, 2, 2.0, 1.0)), 1.0, 1e-12);
}

TEST(KantorovichLimitProperty, PositiveForDisjointBalls) {
  gen::Source src(801);
  for (int t = 0; t < gen::trials; ++t) {
    const int n = src.integer(2, 4);
    ProblemCase pc = make_uniform_case(CaseKind::DisjointBalls, n, src.uniform(0.2, 3.0), src.uniform(0.2, 3.0));
    const auto d = RadialDensity::power_law(1.0, src.uniform(0.0, 3.0), {0.0, pc.R1});
    pc.f_plus = d.scaled(1.0 / (surface_constant(n) * d.moment(0.0, pc.R1, n)));
    const double K = kantorovich_limit_value(pc);
    ASSERT_GT(K, 0.0);
    // uniform balls carry R / (n + 1) each
    if (t % 10 == 0) {
      const ProblemCase u = make_uniform_case(CaseKind::DisjointBalls, n, pc.R1, pc.R2);
      ASSERT_NEAR(kantorovich_limit_value(u), (pc.R1 + pc.R2) / (n + 1.0), 1e-10);
    }
  }
}

TEST(GradientGap, ClosedFormAtProbe) {
  const FluxField fl = flux_disjoint_source(disjoint());
  const double gap = 1.0 - std::abs(gradient_at(fl, 64.0, 0.5));
  EXPECT_NEAR(gap, 1.0 - std::pow(0.5 / (2.0 * pi), 1.0 / 63.0), 1e-14);
  EXPECT_NEAR(gap, 0.039, 1e-3);
}

TEST(GradientProbes, MarginsAroundCenterAndKink) {
  const auto b = gradient_probes({0.0, 1.0}, true, std::nullopt);
  ASSERT_EQ(b.size(), 8u);
  for (double r : b) EXPECT_GE(r, 0.1);
  const auto a = gradient_probes({1.0, 2.0}, false, 1.5);
  ASSERT_EQ(a.size(), 8u);
  for (double r : a) {
    EXPECT_GT(std::abs(r - 1.5), 0.1 - 1e-12);
    EXPECT_GT(r, 1.0);
    EXPECT_LT(r, 2.0);
  }
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
}

TEST(Sweep, DisjointCauchyTableDecreasesFromP4) {
  const SweepResult& res = disjoint_sweep();
  ASSERT_EQ(res.cauchy_table.size(), 7u);
  for (std::size_t k = 2; k < res.cauchy_table.size(); ++k)
    EXPECT_LT(res.cauchy_table[k], res.cauchy_table[k - 1]) << "pair " << k;
}

TEST(Sweep, DisjointGradientGapsDecreaseAtEveryProbe) {
  const SweepResult& res = disjoint_sweep();
  ASSERT_EQ(res.probe_radii.size(), 16u);
  for (std::size_t k = 1; k < res.grad_gap_table.size(); ++k)
    for (std::size_t j = 0; j < res.probe_radii.size(); ++j)
      EXPECT_LT(res.grad_gap_table[k][j], res.grad_gap_table[k - 1][j]) << "p row " << k << " probe " << j;
  for (std::size_t k = 1; k < res.grad_gap_sup.size(); ++k) EXPECT_LT(res.grad_gap_sup[k], res.grad_gap_sup[k - 1]);
}

TEST(Sweep, DisjointApproachesTheRamps) {
  const SweepResult& res = disjoint_sweep();
  for (std::size_t k = 1; k < res.limit_sup_diff.size(); ++k)
    EXPECT_LT(res.limit_sup_diff[k], res.limit_sup_diff[k - 1]);
  EXPECT_LE(res.limit_sup_diff.back(), 0.02);
  EXPECT_LE(res.sup_potential, 1.0);
  EXPECT_LE(res.sup_gradient, 1.0 + 1e-9);
  EXPECT_NEAR(res.kantorovich_limit, 2.0 / 3.0, 1e-12);
  EXPECT_FALSE(res.limit_kink.has_value());
}

TEST(Sweep, AnnulusConstantsApproachTheMidpointValue) {
  const SweepResult& res = outer_sweep();
  const double lim = oracle::annulus_constant_limit;
  EXPECT_NEAR(lim, 0.0663146, 1e-7);
  for (std::size_t k = 2; k < res.constants.size(); ++k)
    EXPECT_LT(std::abs(res.constants[k] - lim), std::abs(res.constants[k - 1] - lim)) << res.p_values[k];
  EXPECT_LE(std::abs(res.constants.back() - lim), 0.1 * lim);
  for (const auto& fc : oracle::frozen_annulus_constants) {
    const auto it = std::find(res.p_values.begin(), res.p_values.end(), fc.p);
    ASSERT_NE(it, res.p_values.end());
    EXPECT_NEAR(res.constants[it - res.p_values.begin()], fc.C, 1e-10);
  }
  ASSERT_TRUE(res.limit_kink.has_value());
  EXPECT_EQ(*res.limit_kink, 1.5);
  for (std::size_t k = 1; k < res.limit_sup_diff.size(); ++k)
    EXPECT_LT(res.limit_sup_diff[k], res.limit_sup_diff[k - 1]);
  EXPECT_LE(res.limit_sup_diff.back(), 0.02);
  EXPECT_LE(res.sup_potential, 2.0);
}

TEST(Sweep, GeneralDensityKinkComesFromLargestExponent) {
  ProblemCase pc = outer();
  const auto d = RadialDensity::power_law(1.0, 2.0, {1.0, 2.0});
  pc.f_plus = d.scaled(1.0 / (surface_constant(2) * d.moment(1.0, 2.0, 2)));
  const SweepResult res = run_sweep(pc, {4.0, 16.0}, 513, fast());
  ASSERT_TRUE(res.limit_kink.has_value());
  EXPECT_EQ(*res.limit_kink, res.solutions.back().sides[0].flux.zeros[0]);
  EXPECT_NE(*res.limit_kink, 1.5);
}

TEST(Sweep, EnergyReportsWhenRequested) {
  SweepOptions o;
  o.energy.random_test_functions = 2;
  const SweepResult res = run_sweep(disjoint(), {4.0, 8.0}, 1025, o);
  ASSERT_EQ(res.energy_reports.size(), 2u);
  for (const auto& r : res.energy_reports) EXPECT_LE(r.gap_rel, 1e-6);
  EXPECT_LT(res.energy_reports[0].K, res.energy_reports[1].K);
}

TEST(Sweep, InputValidation) {
  EXPECT_THROW(run_sweep(disjoint(), {}, 513, fast()), usage_error);
  EXPECT_THROW(run_sweep(disjoint(), {4.0, 4.0}, 513, fast()), usage_error);
  EXPECT_THROW(run_sweep(disjoint(), {8.0, 4.0}, 513, fast()), usage_error);
  EXPECT_THROW(run_sweep(disjoint(), {2.0, 4.0}, 513, fast()), domain_error);
  std::vector<double> many;
  for (int k = 0; k < 17; ++k) many.push_back(3.0 + k);
  EXPECT_THROW(run_sweep(disjoint(), many, 513, fast()), usage_error);
}

TEST(Sweep, PerExponentFailureNamesTheExponent) {
  try {
    run_sweep(disjoint(), {4.0, 8.0}, 16, fast());
    FAIL() << "expected convergence_error";
  } catch (const convergence_error& e) {
    EXPECT_NE(std::string(e.what()).find("sweep failed at p = 4"), std::string::npos) << e.what();
  }
}

TEST(ParallelFor, RunsEveryJobAndRethrowsLowestIndex) {
  setenv("KPLAP_THREADS", "3", 1);
  EXPECT_EQ(worker_count(10), 3u);
  EXPECT_EQ(worker_count(2), 2u);
  std::atomic<int> done{0};
  parallel_for(50, [&](std::size_t) { ++done; });
  EXPECT_EQ(done, 50);
  try {
    parallel_for(8, [](std::size_t i) {
      if (i == 5 || i == 2) throw std::runtime_error("job " + std::to_string(i));
    });
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "job 2");
  }
  unsetenv("KPLAP_THREADS");
}
