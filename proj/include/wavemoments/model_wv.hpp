// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WAVEMOMENTS_MODEL_WV_HPP
#define WAVEMOMENTS_MODEL_WV_HPP

/** @file
 * Model-implied wavelet variance nu(theta) and its Jacobian.
 *
 * Two independent routes are provided.  theoretical_wv evaluates the filter
 * quadratic form sum_k R_j(k) gamma(k) against each component's ACF (RW and
 * drift through their increments), theoretical_wv_sdf integrates
 * |H_j(f)|^2 S(f) numerically.  The first is the one used for fitting.
 */

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "wavemoments/error.hpp"
#include "wavemoments/model.hpp"
#include "wavemoments/wavelet.hpp"

namespace wavemoments {

/// Filter quantities that theoretical_wv needs at one level.
struct LevelFilterInfo {
  std::vector<double> acf;  // R_j(k), k = 0..L_j-1
  double rw = 0.0;          // sum of squared partial sums of the taps
  double drift = 0.0;       // (sum_l l h_l)^2
};

/// Cached per (family, level); safe to call concurrently.
inline std::shared_ptr<const LevelFilterInfo> level_filter_info(
    WaveletFamily family, int level) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const LevelFilterInfo>>
      cache;
  const auto key = std::make_pair(static_cast<int>(family), level);
  {
    std::lock_guard<std::mutex> lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto info = std::make_shared<LevelFilterInfo>();
  info->acf = filter_autocorrelation(family, level);
  const auto h = build_filter(family, level).taps;
  double partial = 0.0, moment = 0.0;
  for (std::size_t l = 0; l < h.size(); ++l) {
    partial += h[l];
    info->rw += partial * partial;
    moment += static_cast<double>(l) * h[l];
  }
  // Filters with two or more vanishing moments remove a linear trend.
  info->drift = base_length(family) >= 4 ? 0.0 : moment * moment;
  std::lock_guard<std::mutex> lock(mutex);
  return cache.emplace(key, std::move(info)).first->second;
}

/// Autocovariances gamma(0..max_lag) of a causal ARMA process
/// X_t = sum ar_i X_{t-i} + e_t + sum ma_k e_{t-k}, Var(e) = nu2.
inline std::vector<double> arma_acf(const std::vector<double>& ar,
                                    const std::vector<double>& ma, double nu2,
                                    std::size_t max_lag) {
  const std::size_t p = ar.size(), q = ma.size();
  // psi weights of the MA(infinity) form, needed up to lag q.
  std::vector<double> psi(q + 1, 0.0);
  psi[0] = 1.0;
  for (std::size_t j = 1; j <= q; ++j) {
    double v = ma[j - 1];
    for (std::size_t i = 1; i <= std::min(j, p); ++i) v += ar[i - 1] * psi[j - i];
    psi[j] = v;
  }
  auto theta = [&](std::size_t j) { return j == 0 ? 1.0 : ma[j - 1]; };
  auto rhs = [&](std::size_t k) {
    double v = 0.0;
    for (std::size_t j = k; j <= q; ++j) v += theta(j) * psi[j - k];
    return nu2 * v;
  };
  std::vector<double> g(max_lag + 1, 0.0);
  // gamma(k) - sum_i ar_i gamma(|k-i|) = rhs(k) for k = 0..p.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p + 1),
                                            static_cast<Eigen::Index>(p + 1));
  Eigen::VectorXd b(static_cast<Eigen::Index>(p + 1));
  for (std::size_t k = 0; k <= p; ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    A(r, r) += 1.0;
    for (std::size_t i = 1; i <= p; ++i) {
      const auto lag = static_cast<Eigen::Index>(k >= i ? k - i : i - k);
      A(r, lag) -= ar[i - 1];
    }
    b(r) = rhs(k);
  }
  const Eigen::VectorXd head = A.fullPivLu().solve(b);
  for (std::size_t k = 0; k <= std::min(p, max_lag); ++k) {
    g[k] = head(static_cast<Eigen::Index>(k));
  }
  for (std::size_t k = p + 1; k <= max_lag; ++k) {
    double v = k <= q ? rhs(k) : 0.0;
    for (std::size_t i = 1; i <= p; ++i) v += ar[i - 1] * g[k - i];
    g[k] = v;
  }
  return g;
}

/// Autocovariances of a stationary component up to max_lag.
inline std::vector<double> component_acf(const ModelComponent& c,
                                         std::size_t max_lag) {
  std::vector<double> g(max_lag + 1, 0.0);
  switch (c.kind) {
    case ComponentKind::wn:
      g[0] = c.params[0];
      return g;
    case ComponentKind::qn:
      g[0] = 2.0 * c.params[0];
      if (max_lag >= 1) g[1] = -c.params[0];
      return g;
    case ComponentKind::ar1: {
      const double rho = c.params[0];
      double v = c.params[1] / (1.0 - rho * rho);
      for (std::size_t k = 0; k <= max_lag; ++k) {
        g[k] = v;
        v *= rho;
        if (v == 0.0) break;
      }
      return g;
    }
    case ComponentKind::arma:
      return arma_acf(c.ar(), c.ma(), c.innovation_variance(), max_lag);
    default:
      throw ConfigError(to_string(c.kind) + " has no autocovariance",
                        "non_stationary");
  }
}

/// Spectral density S(f), f in cycles per sample, of a stationary component
/// or of a random walk (a pseudo-spectrum with a pole at 0).
inline double component_sdf(const ModelComponent& c, double f) {
  const double w = 2.0 * std::numbers::pi * f;
  switch (c.kind) {
    case ComponentKind::wn: return c.params[0];
    case ComponentKind::qn: {
      const double s = std::sin(std::numbers::pi * f);
      return 4.0 * c.params[0] * s * s;
    }
    case ComponentKind::rw: {
      const double s = std::sin(std::numbers::pi * f);
      return c.params[0] / (4.0 * s * s);
    }
    case ComponentKind::ar1:
    case ComponentKind::arma: {
      const auto ar = c.ar();
      const auto ma = c.ma();
      const std::complex<double> z = std::polar(1.0, -w);
      std::complex<double> num{1.0, 0.0}, den{1.0, 0.0}, zk{1.0, 0.0};
      for (std::size_t k = 1; k <= std::max(ar.size(), ma.size()); ++k) {
        zk *= z;
        if (k <= ma.size()) num += ma[k - 1] * zk;
        if (k <= ar.size()) den -= ar[k - 1] * zk;
      }
      return c.innovation_variance() * std::norm(num) / std::norm(den);
    }
    case ComponentKind::dr: break;
  }
  throw ConfigError("drift has no spectral density", "non_stationary");
}

/// Number of differences needed to make the component stationary.
inline int integration_order(const ModelComponent& c) {
  return c.stationary() ? 0 : 1;
}

/// Throws ConfigError when the filter does not annihilate a non-stationary
/// component (a filter of base length L_1 removes polynomials of degree
/// below L_1 / 2).
inline void check_compatible(const ModelSpec& m, WaveletFamily family) {
  const int moments = static_cast<int>(base_length(family) / 2);
  for (const auto& c : m.components) {
    if (integration_order(c) > moments) {
      throw ConfigError(to_string(c.kind) + " is not annihilated by the " +
                            to_string(family) + " filter",
                        "incompatible_filter");
    }
  }
}

/// Lag beyond which the autocovariances of an AR1 or ARMA component are
/// below 1e-20 of gamma(0), from the spectral radius of the AR companion
/// matrix.
inline std::size_t acf_horizon(const ModelComponent& c) {
  double radius = 0.0;
  std::size_t base = 0;
  if (c.kind == ComponentKind::ar1) {
    radius = std::abs(c.params[0]);
  } else {
    const auto ar = c.ar();
    base = ar.size() + c.ma().size();
    if (!ar.empty()) {
      const auto p = static_cast<Eigen::Index>(ar.size());
      Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
      for (Eigen::Index i = 0; i < p; ++i) companion(0, i) = ar[static_cast<std::size_t>(i)];
      for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
      radius = companion.eigenvalues().cwiseAbs().maxCoeff();
    }
  }
  if (radius <= 0.0) return base;
  if (radius >= 1.0) return std::numeric_limits<std::size_t>::max();
  const double lags = 1.5 * std::log(1e-20) / std::log(radius);
  if (!(lags < 1e15)) return std::numeric_limits<std::size_t>::max();
  return base + 64 + static_cast<std::size_t>(lags);
}

/// nu_j^2 of one component at one level by the quadratic-form route.
inline double component_wv(const ModelComponent& c, const LevelFilterInfo& info) {
  switch (c.kind) {
    case ComponentKind::wn: return c.params[0] * info.acf[0];
    case ComponentKind::qn:
      return c.params[0] * 2.0 * (info.acf[0] - info.acf[1]);
    case ComponentKind::rw: return c.params[0] * info.rw;
    case ComponentKind::dr: return c.params[0] * c.params[0] * info.drift;
    default: break;
  }
  const auto& R = info.acf;
  const std::size_t max_lag = std::min(R.size() - 1, acf_horizon(c));
  const auto g = component_acf(c, max_lag);
  double v = R[0] * g[0];
  for (std::size_t k = 1; k <= max_lag; ++k) v += 2.0 * R[k] * g[k];
  return v;
}

/// Model-implied wavelet variance at levels 1..J (quadratic-form route).
inline std::vector<double> theoretical_wv(const ModelSpec& m, int J,
                                          WaveletFamily family = WaveletFamily::haar) {
  validate(m);
  check_compatible(m, family);
  std::vector<double> nu(static_cast<std::size_t>(J), 0.0);
  for (int j = 1; j <= J; ++j) {
    const auto info = level_filter_info(family, j);
    double v = 0.0;
    for (const auto& c : m.components) v += component_wv(c, *info);
    nu[static_cast<std::size_t>(j - 1)] = v;
  }
  return nu;
}

/// Per-component contributions, rows = components, columns = levels.
inline std::vector<std::vector<double>> theoretical_wv_components(
    const ModelSpec& m, int J, WaveletFamily family = WaveletFamily::haar) {
  validate(m);
  check_compatible(m, family);
  std::vector<std::vector<double>> out;
  for (const auto& c : m.components) {
    std::vector<double> row;
    for (int j = 1; j <= J; ++j) row.push_back(component_wv(c, *level_filter_info(family, j)));
    out.push_back(std::move(row));
  }
  return out;
}

namespace detail {

/// Adaptive bisection with a non-adaptive Gauss-Kronrod rule per piece,
/// stopping when the local error estimate meets an absolute tolerance or
/// falls to the rounding level of the piece.
template <class F>
double adaptive_gk(const F& f, double a, double b, double abs_tol, int depth,
                   double& err_sum) {
  using boost::math::quadrature::gauss;
  using boost::math::quadrature::gauss_kronrod;
  double l1 = 0.0;
  const double v = gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, nullptr, &l1);
  const double err = std::abs(v - gauss<double, 15>::integrate(f, a, b));
  const double rounding = 100.0 * std::numeric_limits<double>::epsilon() * l1;
  if (err <= abs_tol || err <= rounding || depth == 0) {
    err_sum += err;
    return v;
  }
  const double mid = 0.5 * (a + b);
  return adaptive_gk(f, a, mid, 0.5 * abs_tol, depth - 1, err_sum) +
         adaptive_gk(f, mid, b, 0.5 * abs_tol, depth - 1, err_sum);
}

/// 2 * integral_0^{1/2} |H_j(f)|^2 S(f) df, split into panels that resolve
/// the pass band of level j.
template <class Sdf>
double integrate_level(WaveletFamily family, int j, Sdf sdf, double rel_tol) {
  using boost::math::quadrature::gauss_kronrod;
  auto integrand = [&](double f) { return squared_gain(family, j, f) * sdf(f); };
  const int panels = 4 << std::min(j, 14);
  const double width = 0.5 / panels;
  double rough = 0.0;
  for (int k = 0; k < panels; ++k) {
    rough += std::abs(gauss_kronrod<double, 31>::integrate(
        integrand, k * width, (k + 1) * width, 0, 0.0));
  }
  const double panel_tol = 0.25 * rel_tol * rough / panels;
  double total = 0.0, err_total = 0.0;
  for (int k = 0; k < panels; ++k) {
    total += adaptive_gk(integrand, k * width, (k + 1) * width, panel_tol, 30,
                         err_total);
  }
  if (!(err_total <= rel_tol * std::abs(total)) && total != 0.0) {
    throw NumericalError("spectral integration at level " + std::to_string(j) +
                             " did not reach the requested tolerance",
                         "quadrature");
  }
  return 2.0 * total;
}

/// lim_{f -> 0} |H_j(f)|^2 / (2 pi f)^2 by Richardson extrapolation.
inline double drift_limit(WaveletFamily family, int j) {
  auto ratio = [&](double f) {
    const double w = 2.0 * std::numbers::pi * f;
    return squared_gain(family, j, f) / (w * w);
  };
  // The ratio is even in f, so the error expansion is in powers of f^2.
  constexpr int kRows = 6;
  double table[kRows][kRows];
  double f = std::ldexp(1e-2, -j);
  for (int k = 0; k < kRows; ++k, f *= 0.5) {
    table[k][0] = ratio(f);
    double factor = 4.0;
    for (int m = 1; m <= k; ++m, factor *= 4.0) {
      table[k][m] = table[k][m - 1] +
                    (table[k][m - 1] - table[k - 1][m - 1]) / (factor - 1.0);
    }
  }
  return table[kRows - 1][kRows - 1];
}

}  // namespace detail

/// Model-implied wavelet variance by integrating |H_j|^2 against the
/// spectral density (drift by its f -> 0 limit).  Cross-check route.
inline std::vector<double> theoretical_wv_sdf(const ModelSpec& m, int J,
                                              WaveletFamily family = WaveletFamily::haar,
                                              double rel_tol = 1e-9) {
  validate(m);
  check_compatible(m, family);
  std::vector<double> nu(static_cast<std::size_t>(J), 0.0);
  for (int j = 1; j <= J; ++j) {
    double v = 0.0;
    for (const auto& c : m.components) {
      if (c.kind == ComponentKind::dr) {
        if (base_length(family) < 4) {
          v += c.params[0] * c.params[0] * detail::drift_limit(family, j);
        }
      } else {
        v += detail::integrate_level(
            family, j, [&c](double f) { return component_sdf(c, f); }, rel_tol);
      }
    }
    nu[static_cast<std::size_t>(j - 1)] = v;
  }
  return nu;
}

/// J x p Jacobian of nu(theta) by central differences.  Variance parameters
/// are stepped in log space.  Throws when theta is on the boundary or a
/// step leaves the parameter space.
inline Eigen::MatrixXd jacobian(const ModelSpec& m, int J,
                                WaveletFamily family = WaveletFamily::haar) {
  validate(m);
  const auto theta = m.theta();
  const auto roles = m.roles();
  const auto names = m.names();
  const std::size_t p = theta.size();
  Eigen::MatrixXd A(J, static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i) {
    const bool log_space = roles[i] == ParamRole::variance;
    const double x = log_space ? std::log(theta[i]) : theta[i];
    const double h = std::max(std::abs(x), 1.0) * 1e-6;
    auto eval = [&](double xi) {
      auto t = theta;
      t[i] = log_space ? std::exp(xi) : xi;
      ModelSpec shifted = m.with_theta(t);
      try {
        validate(shifted);
      } catch (const ConfigError&) {
        throw NumericalError("parameter " + names[i] +
                                 " lies on the boundary of the parameter space",
                             "boundary");
      }
      return theoretical_wv(shifted, J, family);
    };
    const auto up = eval(x + h);
    const auto dn = eval(x - h);
    const double chain = log_space ? 1.0 / theta[i] : 1.0;
    for (int j = 0; j < J; ++j) {
      A(j, static_cast<Eigen::Index>(i)) =
          (up[static_cast<std::size_t>(j)] - dn[static_cast<std::size_t>(j)]) /
          (2.0 * h) * chain;
    }
  }
  return A;
}

}  // namespace wavemoments

#endif  // WAVEMOMENTS_MODEL_WV_HPP
