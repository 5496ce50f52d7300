// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "wavemoments/gmwm.hpp"

namespace wm = wavemoments;

namespace {

// A WV estimate that equals the model's theoretical WV exactly.
wm::WvEstimate exact_estimate(const wm::ModelSpec& m, int J, std::size_t T = 1000) {
  wm::WvEstimate est;
  est.source_length = T;
  for (int j = 1; j <= J; ++j) est.scales.push_back(std::ldexp(1.0, j));
  est.nu2 = wm::theoretical_wv(m, J);
  return est;
}

wm::FitOptions identity_fit() {
  wm::FitOptions o;
  o.omega = wm::OmegaKind::identity;
  o.compute_covariance = false;
  return o;
}

}  // namespace

TEST(Gmwm, WhiteNoiseWeightedLeastSquares) {
  const auto x = wm::simulate(wm::parse_model_with_values("WN(sigma2=1.7)"), 4096, {1, 0});
  const auto pyr = wm::decompose(x, 8);
  auto est = wm::estimate_wv_standard(pyr);
  est.covariance = wm::batched_means_covariance(pyr, est);
  const auto omega = wm::weighting_matrix(est, wm::OmegaKind::diagonal);
  // nu_j = sigma2 g_j with g_j = 2^-j, so the minimizer is a weighted ratio.
  double num = 0.0, den = 0.0;
  for (int j = 1; j <= 8; ++j) {
    const double g = std::ldexp(1.0, -j);
    num += omega(j - 1, j - 1) * g * est.nu2[j - 1];
    den += omega(j - 1, j - 1) * g * g;
  }
  const auto r = wm::fit(est, wm::parse_model("WN").model);
  EXPECT_NEAR(r.theta[0], num / den, 1e-7 * num / den);
  ASSERT_EQ(r.std_error.size(), 1u);
  EXPECT_GT(r.std_error[0], 0.0);
  EXPECT_LT(r.ci_lower[0], r.theta[0]);
  EXPECT_GT(r.ci_upper[0], r.theta[0]);
}

TEST(Gmwm, RecoversParametersFromExactMoments) {
  for (const char* s :
       {"AR1(rho=0.9, nu2=1)", "ARMA(ar=[0.5,-0.3], nu2=1)",
        "ARMA(ar=[0.5], ma=[-0.1,0.5], nu2=1)", "AR1(rho=0.99, nu2=0.1) + AR1(rho=0.6, nu2=2) + WN(sigma2=3)",
        "RW(gamma2=0.01) + WN(sigma2=1)", "QN(q2=0.5) + RW(gamma2=1e-3) + DR(omega=1e-2)"}) {
    const auto m = wm::parse_model_with_values(s);
    const auto r = wm::fit(exact_estimate(m, 9), m, identity_fit());
    const auto truth = m.theta();
    ASSERT_EQ(r.theta.size(), truth.size()) << s;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      EXPECT_NEAR(r.theta[i], truth[i], 1e-4 * std::max(1.0, std::abs(truth[i]))) << s << " " << r.names[i];
    }
    EXPECT_LT(r.objective, 1e-12) << s;
  }
}

TEST(Gmwm, WeightScaleDoesNotMoveEstimate) {
  const auto truth = wm::parse_model_with_values("AR1(rho=0.8, nu2=1) + WN(sigma2=0.5)");
  const auto x = wm::simulate(truth, 3000, {2, 0});
  const auto est = wm::estimate_wv_standard(wm::decompose(x, 8));
  auto o = identity_fit();
  const auto a = wm::fit(est, truth, o);
  o.custom_omega = 7.0 * Eigen::MatrixXd::Identity(8, 8);
  const auto b = wm::fit(est, truth, o);
  for (std::size_t i = 0; i < a.theta.size(); ++i) {
    EXPECT_NEAR(a.theta[i], b.theta[i], 1e-6 * std::max(1.0, std::abs(a.theta[i])));
  }
  EXPECT_NEAR(b.objective, 7.0 * a.objective, 1e-6 * b.objective + 1e-300);
}

TEST(Gmwm, FitIsDeterministicAndStartsAgree) {
  const auto truth = wm::parse_model_with_values("ARMA(ar=[0.5,-0.3], nu2=1)");
  const auto est = wm::estimate_wv_standard(wm::decompose(wm::simulate(truth, 2000, {3, 0}), 9));
  auto o = identity_fit();
  o.seed = 77;
  const auto a = wm::fit(est, truth, o);
  const auto b = wm::fit(est, truth, o);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_TRUE(a.diagnostics.starts_agree);
  EXPECT_EQ(a.diagnostics.starts, 5);
}

TEST(Gmwm, CanonicalOrderOfRepeatedAr1) {
  const auto m = wm::parse_model_with_values("AR1(rho=0.5, nu2=1) + AR1(rho=0.95, nu2=0.3)");
  const auto r = wm::fit(exact_estimate(m, 9), m, identity_fit());
  EXPECT_GT(r.theta[0], r.theta[2]);
  EXPECT_NEAR(r.theta[0], 0.95, 1e-4);
}

TEST(Gmwm, UnderIdentifiedModelIsRejected) {
  const auto m = wm::parse_model_with_values("ARMA(ar=[0.5,-0.3], ma=[0.2], nu2=1) + WN(sigma2=1)");
  try {
    wm::fit(exact_estimate(m, 4), m, identity_fit());
    FAIL();
  } catch (const wm::ConfigError& e) {
    EXPECT_EQ(e.code(), "under_identified");
  }
}

TEST(Gmwm, IncompatibleFilterIsRejected) {
  auto est = exact_estimate(wm::parse_model_with_values("WN(sigma2=1)"), 6);
  EXPECT_THROW(wm::fit(est, wm::parse_model("DR + RW").model, wm::FitOptions{}), wm::ConfigError);
}

TEST(Gmwm, MissingCovarianceForDiagonalWeights) {
  auto est = exact_estimate(wm::parse_model_with_values("WN(sigma2=1)"), 6);
  EXPECT_THROW(wm::fit(est, wm::parse_model("WN").model), wm::ConfigError);
}

TEST(JTest, ChiSquaredTwoDegrees) {
  // Upper tail of chi-squared(2) is exp(-x/2).
  const auto t = wm::j_test(0.003, 1000, 5, 3, true);
  EXPECT_EQ(t.df, 2);
  EXPECT_DOUBLE_EQ(t.statistic, 3.0);
  EXPECT_NEAR(t.p_value, std::exp(-1.5), 1e-12);
  EXPECT_TRUE(t.nominal);
  EXPECT_THROW(wm::j_test(0.1, 1000, 3, 3, true), wm::ConfigError);
}

TEST(JTest, SaturatedFitRecordsNote) {
  const auto m = wm::parse_model_with_values("AR1(rho=0.7, nu2=1)");
  const auto r = wm::fit(exact_estimate(m, 2), m, identity_fit());
  EXPECT_FALSE(r.jtest.has_value());
  EXPECT_NE(r.jtest_note.find("saturated"), std::string::npos);
}

TEST(ParameterCovariance, SingularNamesParameters) {
  const auto m = wm::parse_model_with_values("WN(sigma2=1) + WN(sigma2=2)");
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(6, 6);
  try {
    wm::parameter_covariance(m, I, I);
    FAIL();
  } catch (const wm::NumericalError& e) {
    EXPECT_EQ(e.code(), "rank_deficient");
    EXPECT_NE(std::string(e.what()).find("WN#2.sigma2"), std::string::npos) << e.what();
  }
}

TEST(ParameterCovariance, WhiteNoiseSandwich) {
  // For one parameter, Var = (g' Om S Om g) / (g' Om g)^2 with g_j = 2^-j.
  const int J = 5;
  Eigen::MatrixXd om = Eigen::MatrixXd::Zero(J, J), S(J, J);
  for (int j = 0; j < J; ++j) om(j, j) = 1.0 + j;
  for (int a = 0; a < J; ++a)
    for (int b = 0; b < J; ++b) S(a, b) = std::pow(0.5, std::abs(a - b)) * 1e-3;
  Eigen::VectorXd g(J);
  for (int j = 0; j < J; ++j) g(j) = std::ldexp(1.0, -(j + 1));
  const double expect = g.dot(om * S * om * g) / std::pow(g.dot(om * g), 2);
  const auto C = wm::parameter_covariance(wm::parse_model_with_values("WN(sigma2=2)"), om, S);
  EXPECT_NEAR(C(0, 0), expect, 1e-7 * expect);
}

TEST(ParameterCovariance, StandardErrorsMatchMonteCarlo) {
  const auto truth = wm::parse_model_with_values("AR1(rho=0.7, nu2=1)");
  const int reps = 150;
  std::vector<double> rho, se;
  for (int r = 0; r < reps; ++r) {
    const auto x = wm::simulate(truth, 4096, {31, static_cast<std::uint64_t>(r)});
    const auto pyr = wm::decompose(x, 8);
    auto est = wm::estimate_wv_standard(pyr);
    est.covariance = wm::batched_means_covariance(pyr, est);
    wm::FitOptions o;
    o.starts = 1;
    const auto f = wm::fit(est, truth, o);
    rho.push_back(f.theta[0]);
    se.push_back(f.std_error[0]);
  }
  double m = 0.0, v = 0.0, s = 0.0;
  for (double r : rho) m += r;
  m /= reps;
  for (double r : rho) v += (r - m) * (r - m);
  v /= reps - 1;
  for (double e : se) s += e * e;
  s /= reps;
  EXPECT_NEAR(std::sqrt(s), std::sqrt(v), 0.25 * std::sqrt(v));
}

TEST(Pipeline, ParametricTwoStage) {
  const auto truth = wm::parse_model_with_values("AR1(rho=0.9, nu2=1)");
  const auto x = wm::simulate(truth, 2000, {4, 0});
  wm::PipelineOptions o;
  o.covariance.method = wm::CovarianceMethod::parametric;
  o.covariance.replicates = 50;
  o.fit.omega = wm::OmegaKind::full;
  const auto r = wm::fit_series(x, truth, o);
  ASSERT_TRUE(r.preliminary.has_value());
  ASSERT_TRUE(r.fit.jtest.has_value());
  EXPECT_TRUE(r.fit.jtest->nominal);
  EXPECT_NEAR(r.fit.theta[0], 0.9, 0.1);
  EXPECT_EQ(r.fit.std_error.size(), 2u);
}

TEST(ModelCompare, TrueModelRanksFirst) {
  const auto x = wm::simulate(wm::parse_model_with_values("AR1(rho=0.9, nu2=1) + WN(sigma2=0.5)"),
                              4000, {6, 0});
  wm::PipelineOptions o;
  o.psi = wm::identity_psi();
  const auto rep = wm::model_compare(
      x,
      {wm::parse_model("WN").model, wm::parse_model("AR1 + WN").model,
       wm::parse_model("ARMA(4,4) + ARMA(3,3)").model},
      o);
  ASSERT_EQ(rep.entries.size(), 3u);
  EXPECT_EQ(rep.entries[0].model, "AR1 + WN");
  EXPECT_TRUE(rep.entries[1].ok);
  EXPECT_FALSE(rep.entries[2].ok);
  EXPECT_EQ(rep.entries[2].error_code, "under_identified");
  EXPECT_EQ(rep.entries[0].residuals.size(), rep.wv.nu2.size());
}

TEST(JTest, DegreesOfFreedom) {
  EXPECT_EQ(wm::j_test(0.01, 1000, 9, 2, true).df, 7);
  EXPECT_FALSE(wm::j_test(0.01, 1000, 9, 2, false).nominal);
}

TEST(ParameterCovariance, HalvingWvCovarianceHalvesResult) {
  const auto m = wm::parse_model_with_values("AR1(rho=0.8, nu2=1) + WN(sigma2=0.5)");
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(7, 7);
  for (int j = 0; j < 6; ++j) V(j, j + 1) = V(j + 1, j) = 0.3;
  const Eigen::MatrixXd omega = V.inverse();
  const auto full = wm::parameter_covariance(m, omega, V);
  const auto half = wm::parameter_covariance(m, omega, 0.5 * V);
  EXPECT_LT((half - 0.5 * full).norm(), 1e-12 * full.norm());
}

TEST(ParameterCovariance, SingularFitKeepsEstimate) {
  const auto truth = wm::parse_model_with_values("WN(sigma2=1)");
  auto est = exact_estimate(truth, 6);
  est.covariance = Eigen::MatrixXd::Identity(6, 6) * 1e-4;
  auto opt = identity_fit();
  opt.compute_covariance = true;
  const auto r = wm::fit(est, wm::parse_model("WN + WN").model, opt);
  EXPECT_NEAR(r.theta[0] + r.theta[1], 1.0, 1e-6);
  EXPECT_TRUE(r.jtest.has_value());
  EXPECT_EQ(r.covariance.size(), 0);
  EXPECT_TRUE(r.std_error.empty());
  EXPECT_NE(r.covariance_note.find("near-collinear"), std::string::npos);
}
