// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WAVEMOMENTS_WV_HPP
#define WAVEMOMENTS_WV_HPP

/** @file
 * Standard and M-estimators of the wavelet variance, plus interval
 * construction.  The robust estimator at level j solves
 *
 *     (1/M_j) sum_t chi(W_{j,t}^2 / s) = a(c)
 *
 * for s = nu_j^2, with chi(r^2) = w(r)^2 r^2 (see psi.hpp).  Coefficients are
 * assumed to have mean zero; no re-centering is applied.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/tools/roots.hpp>

#include "wavemoments/error.hpp"
#include "wavemoments/psi.hpp"
#include "wavemoments/wavelet.hpp"

namespace wavemoments {

struct WvEstimate {
  WaveletFamily family = WaveletFamily::haar;
  std::size_t source_length = 0;
  PsiSpec psi;                    // identity for the standard estimator
  std::vector<double> scales;     // tau_j = 2^j
  std::vector<double> nu2;        // per-scale wavelet variance
  /// weights[j-1][i] = w(r)^2 of coefficient i at level j, in [0, 1].
  std::vector<std::vector<double>> weights;
  /// Estimated Var(nu-hat), i.e. V/T.  Empty until a covariance is attached.
  Eigen::MatrixXd covariance;
  std::vector<double> ci_lower, ci_upper;
  double alpha = 0.05;

  int levels() const noexcept { return static_cast<int>(nu2.size()); }
  bool robust() const noexcept { return !psi.is_identity(); }
  bool has_covariance() const noexcept {
    return covariance.rows() == levels() && levels() > 0;
  }
  Eigen::VectorXd nu2_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(nu2.data(),
                                             static_cast<Eigen::Index>(nu2.size()));
  }
  std::string tag() const {
    return robust() ? "robust(" + to_string(psi.kind) + ")" : "standard";
  }
};

namespace detail {

inline WvEstimate empty_estimate(const CoefficientPyramid& pyr,
                                 const PsiSpec& psi) {
  WvEstimate est;
  est.family = pyr.family;
  est.source_length = pyr.source_length;
  est.psi = psi;
  for (int j = 1; j <= pyr.depth(); ++j) est.scales.push_back(std::ldexp(1.0, j));
  return est;
}

/// Mean of chi(W^2 / s) over one level, minus a.
inline double estimating_mean(const std::vector<double>& w, double s,
                              const PsiSpec& psi, double a) {
  double acc = 0.0;
  const double inv = 1.0 / s;
  for (double x : w) acc += psi.chi_of_r2(x * x * inv);
  return acc / static_cast<double>(w.size()) - a;
}

inline double median_of_squares(const std::vector<double>& w) {
  std::vector<double> sq(w.size());
  std::transform(w.begin(), w.end(), sq.begin(), [](double x) { return x * x; });
  auto mid = sq.begin() + static_cast<std::ptrdiff_t>(sq.size() / 2);
  std::nth_element(sq.begin(), mid, sq.end());
  return *mid;
}

}  // namespace detail

/// Mean of squared coefficients per level.
inline WvEstimate estimate_wv_standard(const CoefficientPyramid& pyr) {
  WvEstimate est = detail::empty_estimate(pyr, identity_psi());
  for (int j = 1; j <= pyr.depth(); ++j) {
    const auto& w = pyr.level(j);
    if (w.empty()) {
      throw NumericalError("level " + std::to_string(j) + " has no coefficients",
                           "empty_level");
    }
    double acc = 0.0;
    for (double x : w) acc += x * x;
    const double v = acc / static_cast<double>(w.size());
    if (!(v > 0.0)) {
      throw DegenerateLevelError(
          j, "level " + std::to_string(j) +
                 ": all wavelet coefficients are zero (constant input?)");
    }
    est.nu2.push_back(v);
    est.weights.emplace_back(w.size(), 1.0);
  }
  return est;
}

struct RobustOptions {
  /// Minimum coefficients per level for a bounded psi.
  std::size_t min_coefficients = 10;
  int max_iterations = 200;
};

/// Result of one level's root solve, exposed for diagnostics and tests.
struct LevelSolve {
  double nu2 = 0.0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  int iterations = 0;
};

/// Solves the level estimating equation in s = nu^2.  The start is the
/// median of squared coefficients rescaled by the chi^2_1 median; the bracket
/// is expanded geometrically within [s0 / 1e4, s0 * 1e4] until a descending
/// sign change is bracketed.
inline LevelSolve solve_level(const std::vector<double>& w, const PsiSpec& psi,
                              int level, const RobustOptions& opt = {}) {
  const double a = consistency_correction(psi);
  constexpr double kChi2Median = 0.454936423119572;
  double s0 = detail::median_of_squares(w) / kChi2Median;
  if (!(s0 > 0.0)) {
    double acc = 0.0;
    for (double x : w) acc += x * x;
    s0 = acc / static_cast<double>(w.size());
  }
  if (!(s0 > 0.0) || !std::isfinite(s0)) {
    throw DegenerateLevelError(
        level, "level " + std::to_string(level) +
                   ": all wavelet coefficients are zero, no root exists");
  }
  auto f = [&](double s) { return detail::estimating_mean(w, s, psi, a); };

  const double f0 = f(s0);
  if (f0 == 0.0) return {s0, s0, s0, 0};

  const double step = 2.0;
  const double lower_limit = s0 * 1e-4, upper_limit = s0 * 1e4;
  double lo = s0, hi = s0, flo = f0, fhi = f0;
  bool bracketed = false;
  auto search = [&](double from, double f_from, double factor,
                    bool want_positive) {
    double s = from, fs = f_from;
    for (;;) {
      const double next = s * factor;
      if (next < lower_limit || next > upper_limit) return false;
      const double fn = f(next);
      if ((want_positive && fn > 0.0) || (!want_positive && fn < 0.0)) {
        if (factor < 1.0) {
          lo = next, flo = fn, hi = s, fhi = fs;
        } else {
          lo = s, flo = fs, hi = next, fhi = fn;
        }
        return true;
      }
      s = next;
      fs = fn;
    }
  };
  if (f0 > 0.0) {
    bracketed = search(s0, f0, step, false);
  } else {
    bracketed = search(s0, f0, 1.0 / step, true);
    if (!bracketed) {
      // A redescending psi is negative on both sides of its hump; look above
      // the start for a positive value, then for the descending crossing.
      double s = s0;
      for (;;) {
        s *= step;
        if (s > upper_limit) break;
        const double fs = f(s);
        if (fs > 0.0) {
          bracketed = search(s, fs, step, false);
          break;
        }
      }
    }
  }
  if (!bracketed) {
    throw DegenerateLevelError(
        level, "level " + std::to_string(level) +
                   ": no sign change of the estimating equation in [" +
                   std::to_string(lower_limit) + ", " +
                   std::to_string(upper_limit) + "]");
  }
  boost::uintmax_t iters = static_cast<boost::uintmax_t>(opt.max_iterations);
  auto tol = boost::math::tools::eps_tolerance<double>(
      std::numeric_limits<double>::digits - 2);
  auto [r0, r1] =
      boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
  if (iters >= static_cast<boost::uintmax_t>(opt.max_iterations)) {
    throw NumericalError("level " + std::to_string(level) +
                             ": root solve did not converge in " +
                             std::to_string(opt.max_iterations) +
                             " iterations (bracket [" + std::to_string(r0) +
                             ", " + std::to_string(r1) + "])",
                         "no_convergence");
  }
  return {0.5 * (r0 + r1), lo, hi, static_cast<int>(iters)};
}

/// M-estimator of the wavelet variance.  Stores the final squared weights
/// w(r_{j,t})^2 for every coefficient.
inline WvEstimate estimate_wv_robust(const CoefficientPyramid& pyr,
                                     const PsiSpec& psi,
                                     const RobustOptions& opt = {}) {
  validate(psi);
  WvEstimate est = detail::empty_estimate(pyr, psi);
  for (int j = 1; j <= pyr.depth(); ++j) {
    const auto& w = pyr.level(j);
    if (w.empty()) {
      throw NumericalError("level " + std::to_string(j) + " has no coefficients",
                           "empty_level");
    }
    if (!psi.is_identity() && w.size() < opt.min_coefficients) {
      throw DataError("level " + std::to_string(j) + " has " +
                          std::to_string(w.size()) +
                          " coefficients, fewer than the robust floor of " +
                          std::to_string(opt.min_coefficients),
                      "too_few_coefficients");
    }
    const double s = solve_level(w, psi, j, opt).nu2;
    est.nu2.push_back(s);
    std::vector<double> wt(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      wt[i] = psi.weight2_of_r2(w[i] * w[i] / s);
    }
    est.weights.push_back(std::move(wt));
  }
  return est;
}

/// Dispatches on the psi: identity gives the standard estimator.
inline WvEstimate estimate_wv(const CoefficientPyramid& pyr, const PsiSpec& psi,
                              const RobustOptions& opt = {}) {
  return psi.is_identity() ? estimate_wv_standard(pyr)
                           : estimate_wv_robust(pyr, psi, opt);
}

/// Gaussian intervals on log(nu^2) by the delta method, back-transformed.
inline void wv_confidence_intervals(WvEstimate& est, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("alpha must lie in (0, 1)", "bad_alpha");
  }
  if (!est.has_covariance()) {
    throw ConfigError("confidence intervals need a covariance estimate",
                      "missing_covariance");
  }
  const double z = boost::math::quantile(
      boost::math::complement(boost::math::normal_distribution<double>(),
                              alpha / 2.0));
  est.alpha = alpha;
  est.ci_lower.resize(est.nu2.size());
  est.ci_upper.resize(est.nu2.size());
  for (std::size_t j = 0; j < est.nu2.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double var = std::max(0.0, est.covariance(jj, jj));
    const double se_log = std::sqrt(var) / est.nu2[j];
    est.ci_lower[j] = est.nu2[j] * std::exp(-z * se_log);
    est.ci_upper[j] = est.nu2[j] * std::exp(z * se_log);
  }
}

}  // namespace wavemoments

#endif  // WAVEMOMENTS_WV_HPP
