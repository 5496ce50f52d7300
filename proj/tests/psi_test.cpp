// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "wavemoments/psi.hpp"

namespace wm = wavemoments;

namespace {

// Plain Monte Carlo of E[chi(r)] with its standard error.
std::pair<double, double> mc_correction(const wm::PsiSpec& psi, int n,
                                        unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = z(rng);
    const double w = psi.weight(r);
    const double v = w * w * r * r;
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  return {mean, std::sqrt((s2 / n - mean * mean) / n)};
}

}  // namespace

TEST(Psi, Weights) {
  const auto huber = wm::psi_with_c(wm::PsiKind::huber, 1.5);
  EXPECT_EQ(huber.weight(1.0), 1.0);
  EXPECT_DOUBLE_EQ(huber.weight(3.0), 0.5);
  EXPECT_DOUBLE_EQ(huber.weight(-3.0), 0.5);
  const auto tukey = wm::psi_with_c(wm::PsiKind::tukey, 4.0);
  EXPECT_EQ(tukey.weight(4.0), 0.0);
  EXPECT_EQ(tukey.weight(-7.0), 0.0);
  EXPECT_DOUBLE_EQ(tukey.weight(2.0), 0.75 * 0.75);
  EXPECT_EQ(wm::identity_psi().weight(1e300), 1.0);
  for (double r = -10; r <= 10; r += 0.37) {
    for (const auto& p : {huber, tukey}) {
      EXPECT_GE(p.weight(r), 0.0);
      EXPECT_LE(p.weight(r), 1.0);
      EXPECT_NEAR(p.weight2_of_r2(r * r), p.weight(r) * p.weight(r), 1e-15);
      EXPECT_NEAR(p.chi_of_r2(r * r), p.weight(r) * p.weight(r) * r * r, 1e-12);
    }
  }
}

TEST(Psi, Validation) {
  EXPECT_THROW(wm::psi_with_c(wm::PsiKind::tukey, 0.0), wm::ConfigError);
  EXPECT_THROW(wm::psi_with_c(wm::PsiKind::huber, -1.0), wm::ConfigError);
  EXPECT_THROW(wm::validate(wm::PsiSpec{wm::PsiKind::identity, 3.0, {}}),
               wm::ConfigError);
  EXPECT_THROW(wm::parse_psi_kind("hampel"), wm::ConfigError);
  EXPECT_EQ(wm::parse_psi_kind("bisquare"), wm::PsiKind::tukey);
}

TEST(Psi, IdentityCorrectionIsOne) {
  EXPECT_EQ(wm::consistency_correction(wm::identity_psi()), 1.0);
}

TEST(Psi, HuberCorrectionClosedForm) {
  // E[min(r^2, c^2)] = E[r^2; |r| < c] + c^2 P(|r| > c).
  for (double c : {0.5, 1.345, 3.0}) {
    const double phi = std::exp(-0.5 * c * c) / std::sqrt(2 * M_PI);
    const double tail = 0.5 * std::erfc(c / std::sqrt(2.0));
    const double truncated_m2 = (1.0 - 2.0 * tail) - 2.0 * c * phi;
    const double expected = truncated_m2 + 2.0 * c * c * tail;
    EXPECT_NEAR(wm::consistency_correction(wm::psi_with_c(wm::PsiKind::huber, c)),
                expected, 1e-13);
  }
}

TEST(Psi, CorrectionMatchesMonteCarlo) {
  for (double c : {1.345, 3.0}) {
    const auto psi = wm::psi_with_c(wm::PsiKind::huber, c);
    const auto [m, se] = mc_correction(psi, 1'000'000, 3);
    EXPECT_NEAR(wm::consistency_correction(psi), m, 3.5 * se);
  }
  for (double c : {2.2, 4.7}) {
    const auto psi = wm::psi_with_c(wm::PsiKind::tukey, c);
    const auto [m, se] = mc_correction(psi, 1'000'000, 5);
    EXPECT_NEAR(wm::consistency_correction(psi), m, 3.5 * se);
  }
}

TEST(Psi, EfficiencyRoundTripAndMonotone) {
  for (auto kind : {wm::PsiKind::huber, wm::PsiKind::tukey}) {
    double prev = 0.0;
    for (double e : {0.3, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99}) {
      const double c = wm::efficiency_to_c(kind, e);
      EXPECT_NEAR(wm::asymptotic_efficiency(kind, c), e, 1e-9);
      EXPECT_GT(c, prev);
      prev = c;
    }
  }
  EXPECT_TRUE(std::isinf(wm::efficiency_to_c(wm::PsiKind::tukey, 1.0)));
  EXPECT_THROW(wm::efficiency_to_c(wm::PsiKind::tukey, 0.0), wm::ConfigError);
  EXPECT_THROW(wm::efficiency_to_c(wm::PsiKind::tukey, 1.2), wm::ConfigError);
}

TEST(Psi, EfficiencyMatchesSandwichByMonteCarlo) {
  // Var of the estimating-equation root at the standard normal, estimated
  // from the empirical moments of chi and its derivative.
  const auto psi = wm::default_psi();
  std::mt19937_64 rng(17);
  std::normal_distribution<double> z;
  const double c2 = psi.c * psi.c;
  double s_chi = 0, s_chi2 = 0, s_d = 0;
  const int n = 2'000'000;
  for (int i = 0; i < n; ++i) {
    const double r = z(rng), u = r * r / c2;
    double chi = 0, d = 0;
    if (u < 1) {
      const double t = 1 - u;
      chi = r * r * t * t * t * t;
      d = 2 * r * r * t * t * t * (1 - 5 * u);
    }
    s_chi += chi, s_chi2 += chi * chi, s_d += d;
  }
  const double a = s_chi / n;
  const double var = (s_chi2 / n - a * a) / std::pow(0.5 * s_d / n, 2);
  EXPECT_NEAR(2.0 / var, 0.6, 0.01);
}

TEST(Psi, DefaultIsTukeySixtyPercent) {
  const auto p = wm::default_psi();
  EXPECT_EQ(p.kind, wm::PsiKind::tukey);
  ASSERT_TRUE(p.target_efficiency.has_value());
  EXPECT_EQ(*p.target_efficiency, 0.6);
  EXPECT_NEAR(wm::asymptotic_efficiency(p.kind, p.c), 0.6, 1e-9);
}

TEST(Psi, TukeyStationaryPoint) {
  const double c0 = wm::tukey_stationary_c();
  EXPECT_GT(c0, 2.0);
  EXPECT_LT(c0, 3.0);
}
