// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

// Robust fit of a latent AR1 + AR1 + WN model with a J-test.

#include <cstdio>

#include "wavemoments/wavemoments.hpp"

namespace wm = wavemoments;

int main() {
  const auto truth = wm::parse_model_with_values("AR1(rho=0.99, nu2=0.1) + AR1(rho=0.6, nu2=2) + WN(sigma2=3)");
  const auto x = wm::simulate(truth, 100000, {2, 0});
  const auto shape = wm::parse_model("AR1 + AR1 + WN").model;

  wm::PipelineOptions opt;
  opt.fit.omega = wm::OmegaKind::full;
  opt.covariance.method = wm::CovarianceMethod::parametric;
  const auto res = wm::fit_series(x, shape, opt);

  std::printf("%-10s %12s %12s\n", "parameter", "estimate", "std error");
  for (std::size_t i = 0; i < res.fit.theta.size(); ++i) {
    const double se = res.fit.std_error.empty() ? 0.0 : res.fit.std_error[i];
    std::printf("%-10s %12.5g %12.5g\n", res.fit.names[i].c_str(), res.fit.theta[i], se);
  }
  if (res.fit.jtest) {
    std::printf("J = %.3f on %d df, p = %.3f\n", res.fit.jtest->statistic, res.fit.jtest->df,
                res.fit.jtest->p_value);
  }
  return 0;
}
