// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WAVEMOMENTS_WAVELET_HPP
#define WAVEMOMENTS_WAVELET_HPP

/** @file
 * Maximal-overlap wavelet filters and the non-circular pyramid transform.
 *
 * Filters use the maximal-overlap normalization: the level-j wavelet filter
 * has taps summing to zero and squared taps summing to 1/2^j, so for white
 * noise of variance s2 the level-j coefficients have variance s2/2^j.  The
 * coefficient at (0-based) time t combines X[t], X[t-1], ..., X[t-L_j+1];
 * only the M_j = T - L_j + 1 coefficients whose support lies inside the
 * series are kept.
 */

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wavemoments/error.hpp"

namespace wavemoments {

enum class WaveletFamily { haar, d4 };

inline std::string to_string(WaveletFamily f) {
  return f == WaveletFamily::haar ? "haar" : "d4";
}

inline WaveletFamily parse_wavelet_family(std::string_view name) {
  if (name == "haar" || name == "Haar") return WaveletFamily::haar;
  if (name == "d4" || name == "D4" || name == "daubechies4") {
    return WaveletFamily::d4;
  }
  throw ConfigError("unsupported wavelet family '" + std::string(name) + "'",
                    "unsupported_wavelet");
}

/// Uniformly sampled real-valued signal.
struct TimeSeries {
  std::vector<double> values;
  double sampling_period = 1.0;

  std::size_t size() const noexcept { return values.size(); }
};

/// Throws DataError unless the series has at least two finite values.
inline void validate(const TimeSeries& x) {
  if (x.size() < 2) {
    throw DataError("time series needs at least 2 observations", "too_short");
  }
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (!std::isfinite(x.values[t])) {
      throw DataError("non-finite value at index " + std::to_string(t),
                      "non_finite");
    }
  }
}

namespace detail {

struct LevelOneFilters {
  std::vector<double> wavelet;
  std::vector<double> scaling;
};

inline LevelOneFilters level_one(WaveletFamily family) {
  if (family == WaveletFamily::haar) {
    return {{0.5, -0.5}, {0.5, 0.5}};
  }
  // Daubechies extremal phase, 4 taps, rescaled by 1/sqrt(2) for MODWT.
  const double s3 = std::sqrt(3.0);
  const double n = 4.0 * std::numbers::sqrt2 * std::numbers::sqrt2;
  std::vector<double> g{(1 + s3) / n, (3 + s3) / n, (3 - s3) / n,
                        (1 - s3) / n};
  std::vector<double> h(4);
  for (std::size_t l = 0; l < 4; ++l) {
    h[l] = ((l % 2 == 0) ? 1.0 : -1.0) * g[3 - l];
  }
  return {h, g};
}

/// Convolves a with b upsampled by `stride` (stride-1 zeros between taps).
inline std::vector<double> convolve_upsampled(std::span<const double> a,
                                              std::span<const double> b,
                                              std::size_t stride) {
  std::vector<double> out(a.size() + stride * (b.size() - 1), 0.0);
  for (std::size_t k = 0; k < b.size(); ++k) {
    const double bk = b[k];
    if (bk == 0.0) continue;
    double* dst = out.data() + k * stride;
    for (std::size_t i = 0; i < a.size(); ++i) dst[i] += bk * a[i];
  }
  return out;
}

/// Two-sided autocorrelation of a short filter, lags -(L-1)..(L-1).
inline std::vector<double> two_sided_acf(std::span<const double> h) {
  const std::size_t n = h.size();
  std::vector<double> r(2 * n - 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t l = 0; l + k < n; ++l) s += h[l] * h[l + k];
    r[n - 1 + k] = s;
    r[n - 1 - k] = s;
  }
  return r;
}

}  // namespace detail

/// Level-1 filter length L_1 of a family.
inline std::size_t base_length(WaveletFamily family) {
  return family == WaveletFamily::haar ? 2 : 4;
}

/// Filter length L_j = (2^j - 1)(L_1 - 1) + 1.
inline std::size_t filter_length(WaveletFamily family, int level) {
  return ((std::size_t{1} << level) - 1) * (base_length(family) - 1) + 1;
}

/// Number of interior coefficients M_j = T - L_j + 1 (0 if the filter is
/// longer than the series).
inline std::size_t coefficient_count(std::size_t T, WaveletFamily family,
                                     int level) {
  const std::size_t L = filter_length(family, level);
  return T >= L ? T - L + 1 : 0;
}

struct WaveletFilter {
  WaveletFamily family = WaveletFamily::haar;
  int level = 1;
  std::vector<double> taps;

  std::size_t length() const noexcept { return taps.size(); }
  /// Dyadic scale tau_j = 2^j.
  double scale() const noexcept { return std::ldexp(1.0, level); }
};

inline void check_level(int level) {
  if (level < 1 || level > 40) {
    throw ConfigError("wavelet level must lie in [1, 40], got " +
                          std::to_string(level),
                      "bad_level");
  }
}

/// Level-j maximal-overlap wavelet filter built by cascading the level-1
/// scaling filter through j-1 upsampled stages.
inline WaveletFilter build_filter(WaveletFamily family, int level) {
  check_level(level);
  const auto base = detail::level_one(family);
  std::vector<double> approx{1.0};
  for (int k = 1; k < level; ++k) {
    approx = detail::convolve_upsampled(approx, base.scaling,
                                        std::size_t{1} << (k - 1));
  }
  auto taps = detail::convolve_upsampled(approx, base.wavelet,
                                         std::size_t{1} << (level - 1));
  return WaveletFilter{family, level, std::move(taps)};
}

/// Filter autocorrelation R_j(k) = sum_l h_{j,l} h_{j,l+k} for k = 0..L_j-1.
/// Built from the cascade structure in O(L_j * j) operations, so it stays
/// cheap at the large levels needed for long series.
inline std::vector<double> filter_autocorrelation(WaveletFamily family,
                                                  int level) {
  check_level(level);
  const auto base = detail::level_one(family);
  const auto rg = detail::two_sided_acf(base.scaling);
  const auto rh = detail::two_sided_acf(base.wavelet);
  std::vector<double> r{1.0};
  for (int k = 1; k < level; ++k) {
    r = detail::convolve_upsampled(r, rg, std::size_t{1} << (k - 1));
  }
  r = detail::convolve_upsampled(r, rh, std::size_t{1} << (level - 1));
  const std::size_t L = filter_length(family, level);
  // r is two-sided with centre at index L-1.
  return std::vector<double>(r.begin() + static_cast<std::ptrdiff_t>(L - 1),
                             r.end());
}

/// Squared gain |H_j(f)|^2 of the level-j filter at frequency f (cycles per
/// sample), as a product of closed-form level-1 squared gains.  The closed
/// forms keep full relative accuracy as f -> 0.
inline double squared_gain(WaveletFamily family, int level, double f) {
  check_level(level);
  auto wavelet_gain = [family](double x) {
    const double s2 = std::pow(std::sin(std::numbers::pi * x), 2);
    if (family == WaveletFamily::haar) return s2;
    return s2 * s2 * (3.0 - 2.0 * s2);
  };
  auto scaling_gain = [family](double x) {
    const double c2 = std::pow(std::cos(std::numbers::pi * x), 2);
    if (family == WaveletFamily::haar) return c2;
    return c2 * c2 * (3.0 - 2.0 * c2);
  };
  double g = wavelet_gain(std::ldexp(f, level - 1));
  for (int k = 0; k + 1 < level; ++k) g *= scaling_gain(std::ldexp(f, k));
  return g;
}

/// Largest J such that M_J >= min_coeffs and 2^J < T; level 1 is always
/// admitted when M_1 >= min_coeffs.
inline int max_scales(std::size_t T, WaveletFamily family,
                      std::size_t min_coeffs = 1) {
  if (min_coeffs == 0) min_coeffs = 1;
  if (T < base_length(family)) {
    throw DataError("series shorter than level-1 filter", "too_short");
  }
  if (coefficient_count(T, family, 1) < min_coeffs) {
    throw DataError("series too short for the requested coefficient floor",
                    "too_short");
  }
  int J = 1;
  for (int j = 2; j < 40; ++j) {
    const bool below_log2 = (std::size_t{1} << j) < T;
    if (!below_log2 || coefficient_count(T, family, j) < min_coeffs) break;
    J = j;
  }
  return J;
}

/// Per-scale wavelet coefficients of one series.
struct CoefficientPyramid {
  WaveletFamily family = WaveletFamily::haar;
  std::size_t source_length = 0;
  /// levels[j-1] holds the M_j interior coefficients of level j.
  std::vector<std::vector<double>> levels;

  int depth() const noexcept { return static_cast<int>(levels.size()); }
  const std::vector<double>& level(int j) const { return levels.at(j - 1); }
  std::size_t filter_length(int j) const {
    return wavemoments::filter_length(family, j);
  }
};

namespace detail {

// Time-blocked pyramid: every level advances one block of B time points
// before the next block starts, so V_j lives only in a ring buffer indexed by
// time modulo its power-of-two size.
template <std::size_t L1>
void pyramid(const std::vector<double>& x, int J, const LevelOneFilters& base,
             std::vector<std::vector<double>>& levels) {
  std::array<double, L1> h{}, g{};
  std::copy_n(base.wavelet.begin(), L1, h.begin());
  std::copy_n(base.scaling.begin(), L1, g.begin());
  const std::size_t T = x.size();
  constexpr std::size_t B = 512;
  const auto depth = static_cast<std::size_t>(J);

  // first[j] = L_j - 1, the time of the first interior coefficient.
  std::vector<std::size_t> first(depth + 1, 0), mask(depth, 0);
  std::vector<std::vector<double>> ring(depth);
  for (std::size_t j = 1; j <= depth; ++j) {
    first[j] = first[j - 1] + (std::size_t{1} << (j - 1)) * (L1 - 1);
  }
  for (std::size_t j = 1; j < depth; ++j) {
    ring[j].resize(std::bit_ceil((std::size_t{1} << j) * (L1 - 1) + B));
    mask[j] = ring[j].size() - 1;
  }
  levels.resize(depth);
  for (std::size_t j = 1; j <= depth; ++j) levels[j - 1].resize(T - first[j]);

  for (std::size_t t0 = 0; t0 < T; t0 += B) {
    const std::size_t t1 = std::min(T, t0 + B);
    for (std::size_t j = 1; j <= depth; ++j) {
      const std::size_t lo = std::max(t0, first[j]);
      if (lo >= t1) break;
      const std::size_t stride = std::size_t{1} << (j - 1);
      double* w = levels[j - 1].data() - first[j];
      double* out = j < depth ? ring[j].data() : nullptr;
      const std::size_t out_mask = mask[j % depth];
      const double* in = j == 1 ? x.data() : ring[j - 1].data();
      const std::size_t in_mask = j == 1 ? ~std::size_t{0} : mask[j - 1];
      for (std::size_t t = lo; t < t1; ++t) {
        double sw = 0.0, sv = 0.0;
        for (std::size_t l = 0; l < L1; ++l) {
          const double v = in[(t - stride * l) & in_mask];
          sw += h[l] * v;
          sv += g[l] * v;
        }
        w[t] = sw;
        if (out) out[t & out_mask] = sv;
      }
    }
  }
}

}  // namespace detail

/// Non-circular maximal-overlap pyramid algorithm, O(T * J * L_1) time and
/// O(L_J) working memory beyond the output. Storage already held by pyr is
/// reused.
inline void decompose_into(const TimeSeries& series, int J, WaveletFamily family,
                           CoefficientPyramid& pyr) {
  validate(series);
  const std::size_t T = series.size();
  if (J < 1 || J > max_scales(T, family)) {
    throw ConfigError("requested " + std::to_string(J) +
                          " levels, series of length " + std::to_string(T) +
                          " supports at most " +
                          std::to_string(max_scales(T, family)),
                      "too_many_levels");
  }
  const auto base = detail::level_one(family);
  pyr.family = family;
  pyr.source_length = T;
  if (base.wavelet.size() == 2) {
    detail::pyramid<2>(series.values, J, base, pyr.levels);
  } else {
    detail::pyramid<4>(series.values, J, base, pyr.levels);
  }
}

inline CoefficientPyramid decompose(const TimeSeries& series, int J,
                                    WaveletFamily family = WaveletFamily::haar) {
  CoefficientPyramid pyr;
  decompose_into(series, J, family, pyr);
  return pyr;
}

}  // namespace wavemoments

#endif  // WAVEMOMENTS_WAVELET_HPP
