#include <gtest/gtest.h>

#include <cmath>

#include "kplap/canonical_duality.hpp"
#include "support/generators.hpp"

using namespace kplap;
using namespace kplap::duality;

TEST(Ep, Examples) {
  EXPECT_NEAR(E_p(0.5, 4.0), 0.125, 1e-15);
  EXPECT_EQ(E_p(1.0, 7.3), 1.0);
  EXPECT_EQ(E_p(0.0, 3.0), 0.0);
  EXPECT_THROW(E_p(1.2, 4.0), domain_error);
  EXPECT_THROW(E_p(-0.1, 4.0), domain_error);
}

TEST(EpInverse, Examples) {
  EXPECT_NEAR(E_p_inverse(0.125, 4.0), 0.5, 1e-15);
  EXPECT_EQ(E_p_inverse(1.0, 5.0), 1.0);
  EXPECT_NEAR(E_p_inverse(0.25, 3.0), 0.7071067811865476, 1e-15);
  EXPECT_NEAR(std::pow(0.7071067811865476, 4.0), 0.25, 1e-15);
  EXPECT_THROW(E_p_inverse(-1.0, 4.0), domain_error);
}

TEST(SolveDae, Examples) {
  const auto z = solve_dae(0.0, 4.0);
  EXPECT_EQ(z.lambda, 0.0);
  EXPECT_EQ(z.zeta, 0.0);
  EXPECT_EQ(z.xi, 0.0);

  const auto s = solve_dae(0.125, 4.0);
  EXPECT_NEAR(s.lambda, 0.5, 1e-15);
  EXPECT_NEAR(s.zeta, 0.25, 1e-15);
  EXPECT_NEAR(s.xi, 0.5, 1e-15);
  EXPECT_TRUE(s.admissible);

  const auto one = solve_dae(1.0, 9.0);
  EXPECT_EQ(one.lambda, 1.0);
  EXPECT_EQ(one.zeta, 0.5);
  EXPECT_EQ(one.xi, 1.0);
}

TEST(SolveDae, FlagsInadmissibleFlux) {
  const auto s = solve_dae(1.5, 4.0);
  EXPECT_FALSE(s.admissible);
  EXPECT_GT(s.lambda, 1.0);
  EXPECT_THROW(solve_dae(-1e-3, 4.0), domain_error);
  EXPECT_THROW(solve_dae(std::nan(""), 4.0), domain_error);
}

TEST(Psi, Examples) {
  EXPECT_NEAR(psi(1.0, 4.0), 0.25, 1e-15);
  EXPECT_EQ(psi(0.0, 2.5), 0.0);
  EXPECT_NEAR(psi(0.25, 4.0), 0.015625, 1e-15);
  EXPECT_THROW(psi(1.1, 4.0), domain_error);
}

TEST(PsiStar, Examples) {
  EXPECT_EQ(psi_star(0.0, 4.0), 0.0);
  EXPECT_NEAR(psi_star(0.5, 4.0), 0.25, 1e-15);
  EXPECT_NEAR(psi_star(0.25, 4.0), 0.0625, 1e-15);
  EXPECT_THROW(psi_star(0.6, 4.0), domain_error);
}

TEST(Exponent, RejectsPAtMost2) {
  EXPECT_THROW(require_exponent(2.0), domain_error);
  EXPECT_THROW(require_exponent(2.0 + 1e-7), domain_error);
  EXPECT_THROW(require_exponent(1.0), domain_error);
  EXPECT_THROW(require_exponent(INFINITY), domain_error);
  EXPECT_NO_THROW(require_exponent(2.0 + 1e-5));
}

TEST(DualityProperty, LegendreIdentity) {
  gen::Source src(301);
  for (int t = 0; t < gen::trials; ++t) {
    const double p = src.exponent();
    const double xi = src.uniform(0.0, 1.0);
    const double zeta = zeta_of_xi(xi, p);
    ASSERT_NEAR(psi(xi, p) + psi_star(zeta, p), xi * zeta, 1e-12) << "p=" << p << " xi=" << xi;
  }
}

TEST(DualityProperty, LegendreSupremumIsAttainedAtTheCriticalPair) {
  // psi_*(zeta) = sup_xi (xi zeta - psi(xi)) by brute-force scan
  gen::Source src(302);
  for (int t = 0; t < gen::trials; ++t) {
    const double p = src.exponent();
    const double zeta = src.uniform(0.0, 0.5);
    double best = 0.0;
    // cubic spacing resolves the small maximizers of small zeta
    for (int k = 0; k <= 4000; ++k) {
      const double xi = std::pow(k / 4000.0, 3);
      best = std::max(best, xi * zeta - psi(xi, p));
    }
    ASSERT_LE(best, psi_star(zeta, p) + 1e-12);
    ASSERT_GE(best, psi_star(zeta, p) - 1e-6);
  }
}

TEST(DualityProperty, EpRoundTrip) {
  gen::Source src(303);
  for (int t = 0; t < gen::trials; ++t) {
    const double p = src.exponent();
    const double lambda = src.uniform(0.0, 1.0);
    ASSERT_NEAR(E_p_inverse(E_p(lambda, p), p), lambda, 1e-12) << "p=" << p;
  }
}

TEST(DualityProperty, EpStrictlyIncreasing) {
  gen::Source src(304);
  for (int t = 0; t < gen::trials; ++t) {
    const double p = src.exponent();
    double a = src.uniform(0.0, 1.0), b = src.uniform(0.0, 1.0);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    // below ~1e-300 E_p underflows to zero; stay in the representable range
    if (std::pow(a, dae_exponent(p)) < 1e-290) a = std::pow(1e-280, 1.0 / dae_exponent(p));
    if (!(a < b)) continue;
    ASSERT_LT(E_p(a, p), E_p(b, p)) << "p=" << p << " a=" << a << " b=" << b;
  }
}

TEST(DualityProperty, DaeConsistency) {
  gen::Source src(305);
  for (int t = 0; t < gen::trials; ++t) {
    const double p = src.exponent();
    const double th2 = src.uniform(0.0, 1.0);
    const auto s = solve_dae(th2, p);
    ASSERT_NEAR(E_p(s.lambda, p), th2, 1e-12);
    ASSERT_NEAR(s.lambda, 2.0 * s.zeta, 1e-15);
    ASSERT_NEAR(zeta_of_xi(s.xi, p), s.zeta, 1e-12);
    ASSERT_TRUE(s.admissible);
    ASSERT_GE(s.xi, 0.0);
    ASSERT_LE(s.xi, 1.0);
    ASSERT_LE(s.zeta, 0.5);
  }
}

TEST(DualityProperty, GradientRecovery) {
  gen::Source src(306);
  for (int t = 0; t < gen::trials; ++t) {
    const double p = src.exponent();
    const double th2 = src.uniform(0.0, 1.0);
    const auto s = solve_dae(th2, p);
    ASSERT_NEAR(std::sqrt(s.xi), std::pow(th2, 1.0 / (2.0 * p - 2.0)), 1e-12) << "p=" << p;
  }
}
