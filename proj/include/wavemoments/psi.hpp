// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WAVEMOMENTS_PSI_HPP
#define WAVEMOMENTS_PSI_HPP

/** @file
 * Bounded score functions for the scale-type M-estimator of wavelet variance.
 *
 * The estimating function for one level is
 *     mean_t  w(r_t)^2 r_t^2  -  a(c),      r_t = W_t / nu,
 * where w is the weight function of the chosen psi and a(c) is the Fisher
 * consistency constant E[w(r)^2 r^2] under a standard normal r.  Both Huber
 * and Tukey weights depend on r only through r^2, which the code exploits.
 */

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "wavemoments/error.hpp"

namespace wavemoments {

enum class PsiKind { identity, huber, tukey };

inline std::string to_string(PsiKind k) {
  switch (k) {
    case PsiKind::identity: return "identity";
    case PsiKind::huber: return "huber";
    case PsiKind::tukey: return "tukey";
  }
  return "?";
}

inline PsiKind parse_psi_kind(std::string_view s) {
  if (s == "identity" || s == "standard" || s == "none") return PsiKind::identity;
  if (s == "huber") return PsiKind::huber;
  if (s == "tukey" || s == "bisquare" || s == "biweight") return PsiKind::tukey;
  throw ConfigError("unknown psi function '" + std::string(s) + "'", "bad_psi");
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct PsiSpec {
  PsiKind kind = PsiKind::identity;
  double c = kInf;
  /// Set when c was derived from a target asymptotic efficiency.
  std::optional<double> target_efficiency;

  bool is_identity() const noexcept { return kind == PsiKind::identity; }

  /// Weight w(r) in [0, 1].
  double weight(double r) const noexcept {
    const double ar = std::abs(r);
    switch (kind) {
      case PsiKind::identity: return 1.0;
      case PsiKind::huber: return ar <= c ? 1.0 : c / ar;
      case PsiKind::tukey: {
        if (ar >= c) return 0.0;
        const double u = (r / c) * (r / c);
        return (1.0 - u) * (1.0 - u);
      }
    }
    return 1.0;
  }

  /// Squared weight as a function of r^2.
  double weight2_of_r2(double r2) const noexcept {
    switch (kind) {
      case PsiKind::identity: return 1.0;
      case PsiKind::huber: return r2 <= c * c ? 1.0 : c * c / r2;
      case PsiKind::tukey: {
        const double u = r2 / (c * c);
        if (u >= 1.0) return 0.0;
        const double t = 1.0 - u;
        return t * t * t * t;
      }
    }
    return 1.0;
  }

  /// chi(r) = w(r)^2 r^2, the summand of the estimating equation.
  double chi_of_r2(double r2) const noexcept {
    switch (kind) {
      case PsiKind::identity: return r2;
      case PsiKind::huber: return r2 <= c * c ? r2 : c * c;
      case PsiKind::tukey: {
        const double u = r2 / (c * c);
        if (u >= 1.0) return 0.0;
        const double t = 1.0 - u;
        return r2 * t * t * t * t;
      }
    }
    return r2;
  }
};

inline void validate(const PsiSpec& psi) {
  if (psi.is_identity()) {
    if (!std::isinf(psi.c)) {
      throw ConfigError("identity psi requires c = infinity", "bad_psi");
    }
    return;
  }
  if (!(psi.c > 0.0) || std::isnan(psi.c)) {
    throw ConfigError("tuning constant must be positive", "bad_psi");
  }
}

namespace detail {

inline double normal_pdf(double r) {
  return std::exp(-0.5 * r * r) / std::sqrt(2.0 * 3.14159265358979323846);
}

inline double normal_upper_tail(double r) {
  return 0.5 * std::erfc(r / std::sqrt(2.0));
}

/// 2 * integral_0^c f(r) phi(r) dr by adaptive Gauss-Kronrod.
template <class F>
double half_line_moment(F f, double c) {
  using boost::math::quadrature::gauss_kronrod;
  auto integrand = [&](double r) { return f(r) * normal_pdf(r); };
  double err = 0.0;
  const double v =
      gauss_kronrod<double, 61>::integrate(integrand, 0.0, c, 12, 1e-13, &err);
  return 2.0 * v;
}

/// Gaussian moments of the estimating function needed for a(c) and the
/// asymptotic efficiency.
struct PsiMoments {
  double a;         // E[chi]
  double chi2;      // E[chi^2]
  double dchi_r;    // E[chi'(r) r]
};

inline PsiMoments gaussian_moments(PsiKind kind, double c) {
  if (kind == PsiKind::identity || std::isinf(c)) return {1.0, 3.0, 2.0};
  if (kind == PsiKind::huber) {
    const double tail = normal_upper_tail(c);
    const double m2 = half_line_moment([](double r) { return r * r; }, c);
    const double m4 =
        half_line_moment([](double r) { return r * r * r * r; }, c);
    return {m2 + 2.0 * c * c * tail, m4 + 2.0 * c * c * c * c * tail,
            2.0 * m2};
  }
  const double c2 = c * c;
  const double a = half_line_moment(
      [c2](double r) {
        const double t = 1.0 - r * r / c2;
        return r * r * t * t * t * t;
      },
      c);
  const double chi2 = half_line_moment(
      [c2](double r) {
        const double t = 1.0 - r * r / c2;
        const double chi = r * r * t * t * t * t;
        return chi * chi;
      },
      c);
  const double dchi_r = half_line_moment(
      [c2](double r) {
        const double u = r * r / c2;
        const double t = 1.0 - u;
        return 2.0 * r * r * t * t * t * (1.0 - 5.0 * u);
      },
      c);
  return {a, chi2, dchi_r};
}

}  // namespace detail

/// Fisher-consistency constant a(c) = E[w(r)^2 r^2] for standard normal r.
/// Memoized per (kind, c); the identity psi returns exactly 1.
inline double consistency_correction(const PsiSpec& psi) {
  validate(psi);
  if (psi.is_identity()) return 1.0;
  static std::mutex mutex;
  static std::map<std::pair<int, double>, double> cache;
  const auto key = std::make_pair(static_cast<int>(psi.kind), psi.c);
  {
    std::lock_guard<std::mutex> lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const double a = detail::gaussian_moments(psi.kind, psi.c).a;
  std::lock_guard<std::mutex> lock(mutex);
  cache.emplace(key, a);
  return a;
}

/// Asymptotic efficiency of the robust scale estimator relative to the mean
/// of squares, at i.i.d. standard normal coefficients: the ratio of the two
/// sandwich variances.
inline double asymptotic_efficiency(PsiKind kind, double c) {
  if (kind == PsiKind::identity || std::isinf(c)) return 1.0;
  const auto m = detail::gaussian_moments(kind, c);
  const double var_robust =
      (m.chi2 - m.a * m.a) / (0.25 * m.dchi_r * m.dchi_r);
  return 2.0 / var_robust;
}

/// Tukey constant below which E[chi'(r) r] < 0 at the standard normal: the
/// estimating function then has zero slope at the true scale and the
/// efficiency is not monotone in c.  Searches for c are restricted above it.
inline double tukey_stationary_c() {
  static const double c0 = [] {
    double lo = 1.0, hi = 4.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (detail::gaussian_moments(PsiKind::tukey, mid).dchi_r > 0.0) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return 0.5 * (lo + hi);
  }();
  return c0;
}

/// Tuning constant achieving a target efficiency e in (0, 1]; e = 1 gives
/// c = infinity.  Bisection in log c.
inline double efficiency_to_c(PsiKind kind, double e) {
  if (!(e > 0.0 && e <= 1.0)) {
    throw ConfigError("target efficiency must lie in (0, 1]", "bad_efficiency");
  }
  if (kind == PsiKind::identity) {
    if (e != 1.0) {
      throw ConfigError("identity psi has efficiency 1 only", "bad_efficiency");
    }
    return kInf;
  }
  if (e == 1.0) return kInf;
  double lo = std::log(1e-3), hi = std::log(10.0);
  if (kind == PsiKind::tukey) lo = std::log(tukey_stationary_c());
  while (asymptotic_efficiency(kind, std::exp(hi)) < e) {
    hi += std::log(10.0);
    if (hi > std::log(1e8)) {
      throw NumericalError("efficiency target too close to 1", "bad_efficiency");
    }
  }
  if (asymptotic_efficiency(kind, std::exp(lo)) > e) {
    throw NumericalError("efficiency target too small", "bad_efficiency");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (asymptotic_efficiency(kind, std::exp(mid)) < e) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::exp(0.5 * (lo + hi));
}

inline PsiSpec identity_psi() { return PsiSpec{}; }

inline PsiSpec psi_with_c(PsiKind kind, double c) {
  PsiSpec p{kind, kind == PsiKind::identity ? kInf : c, std::nullopt};
  validate(p);
  return p;
}

inline PsiSpec psi_with_efficiency(PsiKind kind, double e) {
  PsiSpec p{kind, efficiency_to_c(kind, e), e};
  if (std::isinf(p.c)) p.kind = PsiKind::identity;
  return p;
}

/// Tukey biweight at 60% asymptotic efficiency.
inline PsiSpec default_psi() {
  static const PsiSpec p = psi_with_efficiency(PsiKind::tukey, 0.6);
  return p;
}

}  // namespace wavemoments

#endif  // WAVEMOMENTS_PSI_HPP
