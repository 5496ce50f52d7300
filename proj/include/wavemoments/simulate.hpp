// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WAVEMOMENTS_SIMULATE_HPP
#define WAVEMOMENTS_SIMULATE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "wavemoments/error.hpp"
#include "wavemoments/model.hpp"
#include "wavemoments/random.hpp"
#include "wavemoments/wavelet.hpp"

namespace wavemoments {

/// Discarded ARMA warm-up samples.
inline std::size_t burn_in(const ModelComponent& c) {
  return std::max<std::size_t>(1000, 50 * static_cast<std::size_t>(c.p + c.q));
}

/// One realization of a single component, length T.  Component k of a model
/// draws from stream.child(k).
inline std::vector<double> simulate_component(const ModelComponent& c,
                                              std::size_t T, Stream stream) {
  auto rng = stream.engine();
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> x(T, 0.0);
  switch (c.kind) {
    case ComponentKind::wn: {
      const double s = std::sqrt(c.params[0]);
      for (auto& v : x) v = s * z(rng);
      break;
    }
    case ComponentKind::qn: {
      // Differences of i.i.d. uniforms with variance q2.
      const double half = std::sqrt(3.0 * c.params[0]);
      std::uniform_real_distribution<double> u(-half, half);
      double prev = u(rng);
      for (auto& v : x) {
        const double cur = u(rng);
        v = cur - prev;
        prev = cur;
      }
      break;
    }
    case ComponentKind::rw: {
      const double s = std::sqrt(c.params[0]);
      double acc = 0.0;
      for (auto& v : x) v = (acc += s * z(rng));
      break;
    }
    case ComponentKind::dr:
      for (std::size_t t = 0; t < T; ++t) x[t] = c.params[0] * static_cast<double>(t + 1);
      break;
    case ComponentKind::ar1:
    case ComponentKind::arma: {
      const auto ar = c.ar();
      const auto ma = c.ma();
      const double s = std::sqrt(c.innovation_variance());
      const std::size_t burn = burn_in(c);
      const std::size_t n = T + burn;
      std::vector<double> e(n), y(n, 0.0);
      for (auto& v : e) v = s * z(rng);
      for (std::size_t t = 0; t < n; ++t) {
        double v = e[t];
        for (std::size_t i = 1; i <= ar.size() && i <= t; ++i) v += ar[i - 1] * y[t - i];
        for (std::size_t k = 1; k <= ma.size() && k <= t; ++k) v += ma[k - 1] * e[t - k];
        y[t] = v;
      }
      std::copy(y.begin() + static_cast<std::ptrdiff_t>(burn), y.end(), x.begin());
      break;
    }
  }
  return x;
}

/// Sum of independent component paths; deterministic in `stream`.
inline TimeSeries simulate(const ModelSpec& m, std::size_t T, Stream stream) {
  validate(m);
  if (T < 1) throw ConfigError("simulation length must be positive", "bad_length");
  TimeSeries out;
  out.values.assign(T, 0.0);
  for (std::size_t k = 0; k < m.components.size(); ++k) {
    const auto x = simulate_component(m.components[k], T, stream.child(k));
    for (std::size_t t = 0; t < T; ++t) out.values[t] += x[t];
  }
  return out;
}

}  // namespace wavemoments

#endif  // WAVEMOMENTS_SIMULATE_HPP
