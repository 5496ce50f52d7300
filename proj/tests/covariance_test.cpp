// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "wavemoments/covariance.hpp"
#include "wavemoments/model.hpp"
#include "wavemoments/simulate.hpp"

namespace wm = wavemoments;

namespace {

// Var of the level-1 Haar mean of squares for white noise: W_t has variance
// s2/2 and lag-one covariance -s2/4, so Var(W^2) = s2^2/2 and the lag-one
// covariance of squares is 2 (s2/4)^2.
double wn_level1_variance(double s2, std::size_t M) {
  return (0.5 * s2 * s2 + 2.0 * 2.0 * (s2 / 4) * (s2 / 4)) / static_cast<double>(M);
}

}  // namespace

TEST(NearestPsd, ClipsNegativeEigenvalues) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
  const auto p = wm::nearest_psd(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
  EXPECT_NEAR(eig.eigenvalues().maxCoeff(), 3.0, 1e-12);
  Eigen::MatrixXd q(2, 2);
  q << 2.0, 0.5, 0.5, 1.0;
  EXPECT_EQ(wm::nearest_psd(q), q);
}

TEST(BatchedMeans, WhiteNoiseLevelOne) {
  const std::size_t T = 1 << 15;
  const auto m = wm::parse_model_with_values("WN(sigma2=2)");
  double acc = 0.0;
  const int reps = 60;
  for (int r = 0; r < reps; ++r) {
    const auto x = wm::simulate(m, T, {21, static_cast<std::uint64_t>(r)});
    const auto pyr = wm::decompose(x, 4);
    const auto est = wm::estimate_wv_standard(pyr);
    acc += wm::batched_means_covariance(pyr, est)(0, 0);
  }
  const double target = wn_level1_variance(2.0, T - 1);
  // Each estimate has relative sd about sqrt(2/B) with B = 31.
  EXPECT_NEAR(acc / reps, target, 0.08 * target);
}

TEST(BatchedMeans, RobustMatchesMonteCarlo) {
  const std::size_t T = 1 << 13;
  const auto m = wm::parse_model_with_values("AR1(rho=0.6, nu2=1)");
  const auto psi = wm::default_psi();
  const int reps = 300, J = 3;
  std::vector<double> mean(J, 0.0), sq(J, 0.0), reported(J, 0.0);
  for (int r = 0; r < reps; ++r) {
    const auto x = wm::simulate(m, T, {22, static_cast<std::uint64_t>(r)});
    const auto pyr = wm::decompose(x, J);
    const auto est = wm::estimate_wv(pyr, psi);
    const auto cov = wm::batched_means_covariance(pyr, est);
    for (int j = 0; j < J; ++j) {
      mean[j] += est.nu2[j];
      sq[j] += est.nu2[j] * est.nu2[j];
      reported[j] += cov(j, j);
    }
  }
  for (int j = 0; j < J; ++j) {
    const double mu = mean[j] / reps;
    const double mc = sq[j] / reps - mu * mu;
    // Monte Carlo variance has relative sd sqrt(2/300) ~ 8%.
    EXPECT_NEAR(reported[j] / reps, mc, 0.3 * mc) << "level " << j + 1;
  }
}

TEST(BatchedMeans, TooFewBatches) {
  const auto x = wm::simulate(wm::parse_model_with_values("WN(sigma2=1)"), 8, {1, 0});
  const auto pyr = wm::decompose(x, 2);
  const auto est = wm::estimate_wv_standard(pyr);
  EXPECT_THROW(wm::batched_means_covariance(pyr, est), wm::DataError);
}

TEST(BlockBootstrap, ReproducibleAndPsd) {
  const auto x = wm::simulate(wm::parse_model_with_values("AR1(rho=0.8, nu2=1)"), 2000, {3, 0});
  wm::CovarianceOptions opt;
  opt.method = wm::CovarianceMethod::block_bootstrap;
  opt.replicates = 40;
  opt.stream = {9, 0};
  const auto a = wm::block_bootstrap_covariance(x, 5, wm::identity_psi(), opt);
  const auto b = wm::block_bootstrap_covariance(x, 5, wm::identity_psi(), opt);
  opt.stream = {9, 1};
  const auto c = wm::block_bootstrap_covariance(x, 5, wm::identity_psi(), opt);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-15);
}

TEST(BlockBootstrap, ThreadCountDoesNotChangeResult) {
  const auto x = wm::simulate(wm::parse_model_with_values("WN(sigma2=1)"), 1000, {4, 0});
  wm::CovarianceOptions opt;
  opt.replicates = 16;
  opt.threads = 1;
  const auto a = wm::block_bootstrap_covariance(x, 4, wm::default_psi(), opt);
  opt.threads = 4;
  const auto b = wm::block_bootstrap_covariance(x, 4, wm::default_psi(), opt);
  EXPECT_EQ(a, b);
}

TEST(ParametricBootstrap, WhiteNoiseLevelOne) {
  const std::size_t T = 4096;
  wm::CovarianceOptions opt;
  opt.replicates = 400;
  opt.stream = {5, 0};
  const auto cov = wm::parametric_covariance(wm::parse_model_with_values("WN(sigma2=1)"), T, 3,
                                             wm::identity_psi(), opt);
  const double target = wn_level1_variance(1.0, T - 1);
  EXPECT_NEAR(cov(0, 0), target, 0.25 * target);
}

TEST(CovarianceDispatch, ParametricNeedsModel) {
  const auto x = wm::simulate(wm::parse_model_with_values("WN(sigma2=1)"), 500, {1, 0});
  const auto pyr = wm::decompose(x, 3);
  const auto est = wm::estimate_wv_standard(pyr);
  wm::CovarianceOptions opt;
  opt.method = wm::CovarianceMethod::parametric;
  EXPECT_THROW(wm::estimate_wv_covariance(x, pyr, est, opt), wm::ConfigError);
  EXPECT_EQ(wm::parse_covariance_method("block-bootstrap"), wm::CovarianceMethod::block_bootstrap);
  EXPECT_THROW(wm::parse_covariance_method("jackknife"), wm::ConfigError);
}
