#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "clab/spherical.hpp"

using namespace clab;

namespace {

// Closed form on H^3.
double phi_h3(double s, double r) {
  if (r == 0.0) return 1.0;
  return std::sinh((s - 1) * r) / ((s - 1) * std::sinh(r));
}

}  // namespace

TEST(Phi, MatchesClosedFormOnH3) {
  for (double s : {1.2, 1.5, 1.8, 1.95}) {
    const SphericalTable t = phi(2, s, 15.0, 0.05);
    for (std::size_t k = 0; k < t.r.size(); ++k)
      EXPECT_NEAR(t.phi[k], phi_h3(s, t.r[k]), 1e-9 * std::max(1.0, phi_h3(s, t.r[k]))) << s << " " << t.r[k];
    EXPECT_LT(t.max_residual, 1e-6);
    EXPECT_LT(t.refinement_change, 1e-10);
  }
}

TEST(Phi, BasicProperties) {
  for (int n : {2, 3, 5}) {
    const double s = n - 0.3;
    const SphericalTable t = phi(n, s, 10.0, 0.1);
    EXPECT_DOUBLE_EQ(t.phi[0], 1.0);
    for (std::size_t k = 1; k < t.phi.size(); ++k) {
      EXPECT_GT(t.phi[k], 0.0);
      EXPECT_LT(t.phi[k], t.phi[k - 1]);
    }
  }
  // s = n is the constant function.
  const SphericalTable c = phi(3, 3.0, 5.0, 0.5);
  for (double v : c.phi) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Phi, RejectsParametersOutsideTheRange) {
  EXPECT_THROW(phi(2, 0.9, 5.0, 0.1), Error);
  EXPECT_THROW(phi(2, 2.1, 5.0, 0.1), Error);
  EXPECT_THROW(phi(2, 1.5, 5.0, 0.0), Error);
  EXPECT_THROW(phi(0, 0.5, 5.0, 0.1), Error);
}

TEST(Phi, DecayRateTendsToSMinusN) {
  EXPECT_NEAR(phi_decay_fit(2, 1.9).slope, -0.1, 0.01);
  EXPECT_NEAR(phi_decay_fit(3, 2.8).slope, -0.2, 0.01);
}

TEST(Phi, InterpolationAndCsv) {
  const SphericalFunction f(2, 1.7, 8.0);
  for (double r : {0.0, 0.013, 1.234567, 7.9})
    EXPECT_NEAR(f(r), phi_h3(1.7, r), 1e-8);
  const SphericalTable t = phi(2, 1.7, 1.0, 0.2);
  std::ostringstream os;
  write_phi_csv(t, os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "r,phi,residual");
}

TEST(Simpson, IntegratesKnownFunctions) {
  EXPECT_NEAR(simpson([](double x) { return std::sin(x); }, 0, M_PI), 2.0, 1e-6);
  EXPECT_NEAR(simpson([](double x) { return std::exp(x); }, 0, 3), std::exp(3) - 1, 1e-5);
}

TEST(Transform, IsLinearInTheProfile) {
  const SphericalFunction f(2, 1.8, 6.0);
  const auto a = [](double r) { return std::exp(-r); };
  const auto b = [](double r) { return 1.0 + r * r; };
  const double ta = spherical_transform(a, f, 5.0), tb = spherical_transform(b, f, 5.0);
  const double tab = spherical_transform([&](double r) { return 2 * a(r) - 3 * b(r); }, f, 5.0);
  EXPECT_NEAR(tab, 2 * ta - 3 * tb, 1e-6 * std::abs(tab));
}

TEST(Transform, SmallBallIsItsVolume) {
  // phi ~ 1 near 0, so the transform of the indicator is about T^{n+1}/(n+1).
  const SphericalFunction f(2, 1.5, 1.0);
  const double T = 0.01;
  EXPECT_NEAR(spherical_transform([](double) { return 1.0; }, f, T) / (T * T * T / 3), 1.0, 1e-3);
}

TEST(Transform, GrowthRateAndHomomorphism) {
  const auto rep = transform_growth(2, 1.9, {4, 5, 6, 7, 8});
  EXPECT_NEAR(rep.expected, 3.6, 1e-12);
  EXPECT_NEAR(rep.fit.slope, 3.6, 0.05 * 3.6);
  EXPECT_LT(rep.max_homomorphism_error, 1e-5);
}

TEST(Kernel, DiagonalGrowthOnH3) {
  const auto rep = kernel_diagonal_check(2, 1.8, {4, 5, 6, 7});
  EXPECT_TRUE(rep.passed);
  EXPECT_FALSE(rep.inconclusive);
  EXPECT_NEAR(rep.fit.slope, 1.6, 0.05 * 1.6);
  EXPECT_LT(rep.c_ratio, 3.0);
  for (const auto& row : rep.rows) {
    EXPECT_TRUE(row.reconstructed);
    EXPECT_LT(row.tail, 1e-6);
  }
}

TEST(Kernel, ProfilePeaksAtTheOrigin) {
  const KernelProfile p = kernel_profile_h3(1.8, 3.0, 0.01);
  ASSERT_FALSE(p.d.empty());
  EXPECT_GT(p.value.front(), 0.0);
  for (double v : p.value) EXPECT_LE(v, p.value.front() * (1 + 1e-6));
  std::ostringstream os;
  write_kernel_csv(p, os);
  EXPECT_EQ(os.str().substr(0, 4), "d,F\n");
}

TEST(Thresholds, ExactValues) {
  const auto t2 = critical_threshold(2);
  EXPECT_EQ(t2.s0, Rational(11, 6));
  EXPECT_EQ(t2.lambda0, Rational(11, 36));
  const auto t3 = critical_threshold(3);
  EXPECT_EQ(t3.s0, Rational(14, 5));
  EXPECT_EQ(t3.lambda0, Rational(14, 25));
  for (int n = 2; n <= 60; ++n) {
    const auto t = critical_threshold(n);
    EXPECT_GT(t.s0, Rational(n, 2));
    EXPECT_LT(t.s0, Rational(n));
    EXPECT_EQ(t.lambda0, t.s0 * (n - t.s0));
    EXPECT_EQ(Rational(n) - t.s0, Rational(2 * (n - 1), (n + 1) * (n + 2)));
  }
  // The gap n - s0 shrinks like 2/n.
  const auto t50 = critical_threshold(50);
  EXPECT_LT(static_cast<double>(Rational(50) - t50.s0) * 50, 2.0);
  EXPECT_THROW(critical_threshold(1), Error);
}

TEST(Thresholds, KeystoneWithTheStandardExponentsIsCritical) {
  for (int n = 2; n <= 8; ++n) {
    const auto k = keystone_threshold(n, Rational(n - 1), Rational(n), Rational(n - 1));
    EXPECT_EQ(k.s0, critical_threshold(n).s0) << n;
  }
  EXPECT_EQ(keystone_threshold(5, 4, 5, 4).s0, Rational(101, 21));
  // A smaller multiplicity exponent moves the threshold towards n.
  EXPECT_GT(keystone_threshold(3, 1, 3, 2).s0, critical_threshold(3).s0);
  EXPECT_THROW(keystone_threshold(3, 2, 2, 1), Error);
  EXPECT_THROW(keystone_threshold(3, 2, 3, 3), Error);
  EXPECT_THROW(keystone_threshold(3, -1, 3, 2), Error);
}
