// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "wavemoments/wavelet.hpp"

namespace wm = wavemoments;

namespace {

// Haar MODWT filter written out directly: 2^{j-1} taps of +1/2^j followed by
// 2^{j-1} taps of -1/2^j.
std::vector<double> haar_by_hand(int j) {
  const int half = 1 << (j - 1);
  std::vector<double> h(2 * half);
  for (int l = 0; l < 2 * half; ++l) h[l] = (l < half ? 1.0 : -1.0) / (1 << j);
  return h;
}

std::vector<double> gaussian(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> x(n);
  for (auto& v : x) v = z(rng);
  return x;
}

double gain_by_sum(const std::vector<double>& h, double f) {
  std::complex<double> acc;
  for (std::size_t l = 0; l < h.size(); ++l) {
    acc += h[l] * std::polar(1.0, -2.0 * std::numbers::pi * f * static_cast<double>(l));
  }
  return std::norm(acc);
}

}  // namespace

TEST(Wavelet, HaarFilterMatchesClosedForm) {
  for (int j = 1; j <= 8; ++j) {
    const auto h = wm::build_filter(wm::WaveletFamily::haar, j).taps;
    const auto ref = haar_by_hand(j);
    ASSERT_EQ(h.size(), ref.size());
    for (std::size_t l = 0; l < h.size(); ++l) EXPECT_NEAR(h[l], ref[l], 1e-15);
  }
}

TEST(Wavelet, FilterEnergyAndZeroSum) {
  for (auto fam : {wm::WaveletFamily::haar, wm::WaveletFamily::d4}) {
    for (int j = 1; j <= 10; ++j) {
      const auto h = wm::build_filter(fam, j).taps;
      EXPECT_EQ(h.size(), wm::filter_length(fam, j));
      double sum = 0.0, energy = 0.0;
      for (double v : h) sum += v, energy += v * v;
      EXPECT_NEAR(sum, 0.0, 1e-13);
      EXPECT_NEAR(energy, std::ldexp(1.0, -j), 1e-14);
    }
  }
}

TEST(Wavelet, FilterLengths) {
  EXPECT_EQ(wm::filter_length(wm::WaveletFamily::haar, 1), 2u);
  EXPECT_EQ(wm::filter_length(wm::WaveletFamily::haar, 3), 8u);
  EXPECT_EQ(wm::filter_length(wm::WaveletFamily::d4, 2), 10u);
}

TEST(Wavelet, AutocorrelationMatchesDirectSum) {
  for (auto fam : {wm::WaveletFamily::haar, wm::WaveletFamily::d4}) {
    for (int j = 1; j <= 7; ++j) {
      const auto h = wm::build_filter(fam, j).taps;
      const auto R = wm::filter_autocorrelation(fam, j);
      ASSERT_EQ(R.size(), h.size());
      for (std::size_t k = 0; k < h.size(); ++k) {
        double direct = 0.0;
        for (std::size_t l = 0; l + k < h.size(); ++l) direct += h[l] * h[l + k];
        EXPECT_NEAR(R[k], direct, 1e-15);
      }
    }
  }
}

TEST(Wavelet, SquaredGainMatchesFourierSum) {
  for (auto fam : {wm::WaveletFamily::haar, wm::WaveletFamily::d4}) {
    for (int j = 1; j <= 6; ++j) {
      const auto h = wm::build_filter(fam, j).taps;
      for (double f : {0.001, 0.03, 0.1, 0.2371, 0.4, 0.5}) {
        EXPECT_NEAR(wm::squared_gain(fam, j, f), gain_by_sum(h, f), 1e-13);
      }
    }
  }
}

TEST(Wavelet, MaxScales) {
  EXPECT_EQ(wm::max_scales(2, wm::WaveletFamily::haar), 1);
  EXPECT_EQ(wm::max_scales(1000, wm::WaveletFamily::haar), 9);
  EXPECT_EQ(wm::max_scales(1024, wm::WaveletFamily::haar), 9);
  EXPECT_EQ(wm::max_scales(1025, wm::WaveletFamily::haar), 10);
  EXPECT_EQ(wm::max_scales(1'000'000, wm::WaveletFamily::haar), 19);
  EXPECT_THROW(wm::max_scales(1, wm::WaveletFamily::haar), wm::DataError);
}

TEST(Wavelet, DecomposeMatchesDirectConvolution) {
  const auto x = gaussian(300, 7);
  for (auto fam : {wm::WaveletFamily::haar, wm::WaveletFamily::d4}) {
    const int J = fam == wm::WaveletFamily::haar ? 8 : 6;
    const auto pyr = wm::decompose({x, 1.0}, J, fam);
    ASSERT_EQ(pyr.depth(), J);
    for (int j = 1; j <= J; ++j) {
      const auto h = wm::build_filter(fam, j).taps;
      const auto& w = pyr.level(j);
      ASSERT_EQ(w.size(), x.size() - h.size() + 1) << "level " << j;
      for (std::size_t i = 0; i < w.size(); ++i) {
        // Coefficient i ends at time i + L_j - 1.
        const std::size_t t = i + h.size() - 1;
        double direct = 0.0;
        for (std::size_t l = 0; l < h.size(); ++l) direct += h[l] * x[t - l];
        ASSERT_NEAR(w[i], direct, 1e-12) << "level " << j << " index " << i;
      }
    }
  }
}

TEST(Wavelet, EnergyAtLevelOneForWhiteNoise) {
  const auto x = gaussian(1 << 16, 11);
  const auto pyr = wm::decompose({x, 1.0}, 1);
  double s = 0.0;
  for (double w : pyr.level(1)) s += w * w;
  const double m = static_cast<double>(pyr.level(1).size());
  // Level-1 Haar coefficients are 1-dependent with lag-1 covariance -1/4.
  const double var_w2 = 2.0 * 0.25;          // Var(W^2) for W ~ N(0, 1/2)
  const double cov_w2 = 2.0 * 0.25 * 0.25;   // Cov(W_t^2, W_{t+1}^2)
  const double se = std::sqrt((var_w2 + 2.0 * cov_w2) / m);
  EXPECT_NEAR(s / m, 0.5, 3.0 * se);
}

TEST(Wavelet, RejectsBadInput) {
  EXPECT_THROW(wm::decompose({{1.0}, 1.0}, 1), wm::DataError);
  EXPECT_THROW(wm::decompose({{1.0, NAN, 2.0}, 1.0}, 1), wm::DataError);
  EXPECT_THROW(wm::decompose({gaussian(16, 1), 1.0}, 5), wm::ConfigError);
  EXPECT_THROW(wm::parse_wavelet_family("coiflet"), wm::ConfigError);
}
