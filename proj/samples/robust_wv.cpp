// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

// Standard and robust wavelet variance of a white-noise series with 1%
// isolated outliers.

#include <cstdio>

#include "wavemoments/wavemoments.hpp"

namespace wm = wavemoments;

int main() {
  const auto truth = wm::parse_model_with_values("WN(sigma2=1)");
  const auto clean = wm::simulate(truth, 4096, {1, 0});
  wm::ContaminationSpec spec;
  spec.kind = wm::ContaminationKind::isolated;
  spec.epsilon = 0.01;
  spec.sigma2 = 100.0;
  const auto x = wm::contaminate(clean, spec, {1, 1});

  const int J = wm::max_scales(x.size(), wm::WaveletFamily::haar);
  const auto pyr = wm::decompose(x, J);
  const auto standard = wm::estimate_wv_standard(pyr);
  const auto robust = wm::estimate_wv(pyr, wm::default_psi());
  const auto model = wm::theoretical_wv(truth, J);

  std::printf("%6s %12s %12s %12s\n", "tau", "standard", "robust", "model");
  for (int j = 0; j < J; ++j) {
    std::printf("%6.0f %12.5g %12.5g %12.5g\n", standard.scales[j], standard.nu2[j], robust.nu2[j],
                model[static_cast<std::size_t>(j)]);
  }
  return 0;
}
