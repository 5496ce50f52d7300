// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WAVEMOMENTS_OPTIMIZE_HPP
#define WAVEMOMENTS_OPTIMIZE_HPP

/** @file
 * Unconstrained minimizers: Nelder-Mead simplex search and a
 * Levenberg-Marquardt polish for sums of squares.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace wavemoments {

struct NelderMeadOptions {
  int max_evaluations = 4000;
  double f_tolerance = 1e-12;   // relative spread of vertex values
  double x_tolerance = 1e-9;    // largest vertex distance from the best, per coordinate
  int restarts = 2;             // fresh simplex around the optimum after convergence
};

struct MinimizeResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  double simplex_size = 0.0;
};

/// Minimizes f from x0.  `step` gives the initial edge length per
/// coordinate.  Non-finite objective values are treated as +infinity.
inline MinimizeResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                  std::vector<double> x0, const std::vector<double>& step,
                                  const NelderMeadOptions& opt = {}) {
  const std::size_t n = x0.size();
  MinimizeResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  if (n == 0) {
    res.x = x0;
    res.f = eval(x0);
    res.converged = true;
    return res;
  }
  const double f_start = eval(x0);
  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> vals(n + 1);

  auto build = [&](const std::vector<double>& base, double scale) {
    pts.assign(n + 1, base);
    vals[0] = eval(base);
    for (std::size_t i = 0; i < n; ++i) {
      pts[i + 1][i] += scale * step[i];
      vals[i + 1] = eval(pts[i + 1]);
    }
  };
  build(x0, 1.0);
  std::vector<std::size_t> order(n + 1);
  int rounds_left = opt.restarts;

  for (;;) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

    double size = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        size = std::max(size, std::abs(pts[k][i] - pts[best][i]));
      }
    }
    res.simplex_size = size;
    const double spread = vals[worst] - vals[best];
    const bool f_ok = std::isfinite(spread) &&
                      (spread <= opt.f_tolerance * std::abs(vals[best]) ||
                       spread <= 1e-300 + 1e-18 * std::abs(f_start));
    if (f_ok && size <= opt.x_tolerance) {
      if (rounds_left-- > 0) {
        // Restart to guard against a collapsed simplex.
        const auto base = pts[best];
        const double prev = vals[best];
        build(base, 0.05);
        if (vals[0] >= prev) vals[0] = prev;
        continue;
      }
      res.converged = true;
      break;
    }
    if (res.evaluations >= opt.max_evaluations) break;
    ++res.iterations;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == worst) continue;
      for (std::size_t i = 0; i < n; ++i) centroid[i] += pts[k][i] / static_cast<double>(n);
    }
    auto along = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (pts[worst][i] - centroid[i]);
      return p;
    };
    const auto xr = along(-1.0);
    const double fr = eval(xr);
    if (fr < vals[best]) {
      const auto xe = along(-2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe, vals[worst] = fe;
      } else {
        pts[worst] = xr, vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr, vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const auto xc = along(outside ? -0.5 : 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc, vals[worst] = fc;
      continue;
    }
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == best) continue;
      for (std::size_t i = 0; i < n; ++i) pts[k][i] = pts[best][i] + 0.5 * (pts[k][i] - pts[best][i]);
      vals[k] = eval(pts[k]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = pts[static_cast<std::size_t>(it - vals.begin())];
  res.f = *it;
  return res;
}

struct LevenbergMarquardtOptions {
  int max_iterations = 100;
  double relative_reduction = 1e-15;
  double step_tolerance = 1e-13;
};

/// Levenberg-Marquardt on 0.5 ||r(x)||^2 with a central-difference Jacobian.
/// Only ever accepts steps that lower the sum of squares.
inline MinimizeResult levenberg_marquardt(
    const std::function<Eigen::VectorXd(const std::vector<double>&)>& residual,
    std::vector<double> x, const LevenbergMarquardtOptions& opt = {}) {
  MinimizeResult res;
  const std::size_t n = x.size();
  auto ssq = [](const Eigen::VectorXd& r) { return r.allFinite() ? r.squaredNorm() : std::numeric_limits<double>::infinity(); };
  Eigen::VectorXd r = residual(x);
  ++res.evaluations;
  double cost = ssq(r);
  double lambda = 1e-3;
  for (int it = 0; it < opt.max_iterations && n > 0; ++it) {
    ++res.iterations;
    Eigen::MatrixXd Jm(r.size(), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const double h = 1e-6 * std::max(std::abs(x[i]), 1.0);
      auto xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      Jm.col(static_cast<Eigen::Index>(i)) = (residual(xp) - residual(xm)) / (2.0 * h);
      res.evaluations += 2;
    }
    if (!Jm.allFinite()) break;
    const Eigen::MatrixXd JtJ = Jm.transpose() * Jm;
    const Eigen::VectorXd g = Jm.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 20; ++tries) {
      Eigen::MatrixXd Aug = JtJ;
      for (Eigen::Index d = 0; d < Aug.rows(); ++d) Aug(d, d) += lambda * std::max(JtJ(d, d), 1e-300);
      const Eigen::VectorXd delta = Aug.ldlt().solve(-g);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      auto xn = x;
      for (std::size_t i = 0; i < n; ++i) xn[i] += delta(static_cast<Eigen::Index>(i));
      const Eigen::VectorXd rn = residual(xn);
      ++res.evaluations;
      const double cn = ssq(rn);
      if (cn < cost) {
        const double reduction = (cost - cn) / std::max(cost, 1e-300);
        x = std::move(xn);
        r = rn;
        cost = cn;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        if (reduction < opt.relative_reduction ||
            delta.cwiseAbs().maxCoeff() < opt.step_tolerance) {
          res.converged = true;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      res.converged = true;
      break;
    }
    if (res.converged) break;
  }
  res.x = std::move(x);
  res.f = cost;
  return res;
}

}  // namespace wavemoments

#endif  // WAVEMOMENTS_OPTIMIZE_HPP
