// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

// Time points whose robust weights at the first two levels fall below 0.01.

#include <cstdio>

#include "wavemoments/wavemoments.hpp"

namespace wm = wavemoments;

int main() {
  const auto truth = wm::parse_model_with_values("AR1(rho=0.5, nu2=1) + WN(sigma2=0.5)");
  auto x = wm::simulate(truth, 2000, {3, 0});
  for (std::size_t t : {250u, 900u, 1500u}) x.values[t] += 25.0;

  const auto pyr = wm::decompose(x, wm::max_scales(x.size(), wm::WaveletFamily::haar));
  const auto robust = wm::estimate_wv(pyr, wm::default_psi());
  for (const auto& f : wm::outlier_flags(robust, 0.01)) {
    std::printf("t = %zu  min weight %.3g\n", f.time, f.min_weight);
  }
  return 0;
}
