// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WAVEMOMENTS_COVARIANCE_HPP
#define WAVEMOMENTS_COVARIANCE_HPP

/** @file
 * Estimates of Var(nu-hat) = V/T for a WvEstimate.
 *
 *   batched_means    sandwich D^-1 Cov(fbar) D^-1 with Cov(fbar) from batch
 *                    means of each level's estimating-function sequence
 *   block_bootstrap  moving-block bootstrap of the series
 *   parametric       simulate from a fitted model and re-estimate
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "wavemoments/error.hpp"
#include "wavemoments/model.hpp"
#include "wavemoments/parallel.hpp"
#include "wavemoments/psi.hpp"
#include "wavemoments/random.hpp"
#include "wavemoments/simulate.hpp"
#include "wavemoments/wavelet.hpp"
#include "wavemoments/wv.hpp"

namespace wavemoments {

enum class CovarianceMethod { batched_means, block_bootstrap, parametric };

inline std::string to_string(CovarianceMethod m) {
  switch (m) {
    case CovarianceMethod::batched_means: return "batched";
    case CovarianceMethod::block_bootstrap: return "block-bootstrap";
    case CovarianceMethod::parametric: return "parametric";
  }
  return "?";
}

inline CovarianceMethod parse_covariance_method(std::string_view s) {
  if (s == "batched" || s == "batched-means") return CovarianceMethod::batched_means;
  if (s == "block-bootstrap" || s == "bootstrap") return CovarianceMethod::block_bootstrap;
  if (s == "parametric" || s == "parametric-bootstrap") return CovarianceMethod::parametric;
  throw ConfigError("unknown covariance method '" + std::string(s) + "'",
                    "bad_covariance_method");
}

struct CovarianceOptions {
  CovarianceMethod method = CovarianceMethod::batched_means;
  std::size_t batches = 0;        // 0: floor(M_1^{1/3})
  std::size_t block_length = 0;   // 0: floor(T^{1/3})
  std::size_t replicates = 100;   // bootstrap resamples
  Stream stream{};
  unsigned threads = 0;
  RobustOptions robust{};
};

/// Symmetrizes and clips negative eigenvalues to zero.
inline Eigen::MatrixXd nearest_psd(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd s = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigen-decomposition failed during PSD repair", "psd_repair");
  }
  if (eig.eigenvalues().minCoeff() >= 0.0) return s;
  const Eigen::VectorXd d = eig.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd out = eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

namespace detail {

/// Sample covariance of the rows of `draws`.
inline Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& draws) {
  const Eigen::RowVectorXd mean = draws.colwise().mean();
  const Eigen::MatrixXd c = draws.rowwise() - mean;
  return (c.transpose() * c) / static_cast<double>(draws.rows() - 1);
}

/// Replicates whose re-estimation failed are empty and are skipped; at
/// least half must survive.
inline Eigen::MatrixXd replicate_covariance(
    const std::vector<std::vector<double>>& reps, int J) {
  std::vector<const std::vector<double>*> ok;
  for (const auto& r : reps) {
    if (!r.empty()) ok.push_back(&r);
  }
  if (ok.size() < 2 || 2 * ok.size() < reps.size()) {
    throw NumericalError(std::to_string(reps.size() - ok.size()) + " of " +
                             std::to_string(reps.size()) +
                             " bootstrap replicates failed to re-estimate the WV",
                         "bootstrap_failed");
  }
  Eigen::MatrixXd draws(static_cast<Eigen::Index>(ok.size()), J);
  for (std::size_t r = 0; r < ok.size(); ++r) {
    for (int j = 0; j < J; ++j) {
      draws(static_cast<Eigen::Index>(r), j) = (*ok[r])[static_cast<std::size_t>(j)];
    }
  }
  return sample_covariance(draws);
}

template <class F>
void try_replicate(std::vector<double>& slot, F&& estimate) {
  try {
    slot = estimate();
  } catch (const Error&) {
    slot.clear();
  }
}

}  // namespace detail

/// Batched-means sandwich.  Each level's sequence f_t = chi(W_t^2/nu^2) - a
/// is cut into B contiguous batches; batch b of every level covers roughly
/// the same stretch of time, so batch means give the cross-level covariance.
inline Eigen::MatrixXd batched_means_covariance(const CoefficientPyramid& pyr,
                                                const WvEstimate& est,
                                                std::size_t batches = 0) {
  const int J = est.levels();
  if (J == 0 || pyr.depth() < J) {
    throw ConfigError("pyramid and estimate disagree on the number of levels",
                      "dimension_mismatch");
  }
  std::size_t min_m = pyr.level(1).size();
  for (int j = 1; j <= J; ++j) min_m = std::min(min_m, pyr.level(j).size());
  std::size_t B = batches;
  if (B == 0) B = static_cast<std::size_t>(std::floor(std::cbrt(static_cast<double>(pyr.level(1).size()))));
  B = std::min(B, min_m);
  if (B < 2) {
    throw DataError("batched-means covariance needs at least 2 batches per level; "
                    "use a longer series or another covariance method",
                    "too_few_batches");
  }
  const PsiSpec& psi = est.psi;
  const double a = consistency_correction(psi);
  Eigen::MatrixXd means(static_cast<Eigen::Index>(B), J);
  Eigen::VectorXd slope(J);
  for (int j = 1; j <= J; ++j) {
    const auto& w = pyr.level(j);
    const double s = est.nu2[static_cast<std::size_t>(j - 1)];
    const std::size_t M = w.size();
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t lo = b * M / B, hi = (b + 1) * M / B;
      double acc = 0.0;
      for (std::size_t i = lo; i < hi; ++i) acc += psi.chi_of_r2(w[i] * w[i] / s) - a;
      means(static_cast<Eigen::Index>(b), j - 1) = acc / static_cast<double>(hi - lo);
    }
    // d/ds of the level mean of f, by central differences.
    const double h = 1e-4 * s;
    const double d = (detail::estimating_mean(w, s + h, psi, a) -
                      detail::estimating_mean(w, s - h, psi, a)) /
                     (2.0 * h);
    if (!(d < 0.0)) {
      throw NumericalError("level " + std::to_string(j) +
                               ": estimating function has no negative slope at the estimate",
                           "flat_estimating_function");
    }
    slope(j - 1) = d;
  }
  const Eigen::MatrixXd cov_fbar = detail::sample_covariance(means) / static_cast<double>(B);
  const Eigen::VectorXd inv = slope.cwiseInverse();
  return nearest_psd(inv.asDiagonal() * cov_fbar * inv.asDiagonal());
}

/// Moving-block bootstrap of the series: blocks of length l with uniformly
/// drawn starts are concatenated to length T, then decomposed and
/// re-estimated.  Replicate r draws from stream.child(r).
inline Eigen::MatrixXd block_bootstrap_covariance(const TimeSeries& x, int J,
                                                  const PsiSpec& psi,
                                                  const CovarianceOptions& opt,
                                                  WaveletFamily family = WaveletFamily::haar) {
  const std::size_t T = x.size();
  std::size_t len = opt.block_length;
  if (len == 0) len = static_cast<std::size_t>(std::floor(std::cbrt(static_cast<double>(T))));
  len = std::clamp<std::size_t>(len, 1, T);
  if (opt.replicates < 2) {
    throw ConfigError("bootstrap needs at least 2 replicates", "bad_replicates");
  }
  std::vector<std::vector<double>> reps(opt.replicates);
  parallel_for(
      opt.replicates,
      [&](std::size_t r) {
        auto rng = opt.stream.child(r).engine();
        std::uniform_int_distribution<std::size_t> start(0, T - len);
        TimeSeries y;
        y.sampling_period = x.sampling_period;
        y.values.reserve(T + len);
        while (y.values.size() < T) {
          const std::size_t s = start(rng);
          y.values.insert(y.values.end(), x.values.begin() + static_cast<std::ptrdiff_t>(s),
                          x.values.begin() + static_cast<std::ptrdiff_t>(s + len));
        }
        y.values.resize(T);
        detail::try_replicate(reps[r], [&] {
          return estimate_wv(decompose(y, J, family), psi, opt.robust).nu2;
        });
      },
      opt.threads);
  return nearest_psd(detail::replicate_covariance(reps, J));
}

/// Parametric bootstrap: `replicates` series of length T simulated from
/// `model`, each re-estimated with the same psi and depth.
inline Eigen::MatrixXd parametric_covariance(const ModelSpec& model, std::size_t T,
                                             int J, const PsiSpec& psi,
                                             const CovarianceOptions& opt,
                                             WaveletFamily family = WaveletFamily::haar) {
  if (opt.replicates < 2) {
    throw ConfigError("bootstrap needs at least 2 replicates", "bad_replicates");
  }
  validate(model);
  std::vector<std::vector<double>> reps(opt.replicates);
  parallel_for(
      opt.replicates,
      [&](std::size_t r) {
        const auto y = simulate(model, T, opt.stream.child(r));
        detail::try_replicate(reps[r], [&] {
          return estimate_wv(decompose(y, J, family), psi, opt.robust).nu2;
        });
      },
      opt.threads);
  return nearest_psd(detail::replicate_covariance(reps, J));
}

/// Dispatches on opt.method.  The parametric method needs `model`.
inline Eigen::MatrixXd estimate_wv_covariance(const TimeSeries& x,
                                              const CoefficientPyramid& pyr,
                                              const WvEstimate& est,
                                              const CovarianceOptions& opt,
                                              const std::optional<ModelSpec>& model = std::nullopt) {
  switch (opt.method) {
    case CovarianceMethod::batched_means:
      return batched_means_covariance(pyr, est, opt.batches);
    case CovarianceMethod::block_bootstrap:
      return block_bootstrap_covariance(x, est.levels(), est.psi, opt, est.family);
    case CovarianceMethod::parametric:
      if (!model) {
        throw ConfigError("parametric covariance needs a model with values",
                          "missing_model");
      }
      return parametric_covariance(*model, x.size(), est.levels(), est.psi, opt, est.family);
  }
  throw ConfigError("unknown covariance method", "bad_covariance_method");
}

}  // namespace wavemoments

#endif  // WAVEMOMENTS_COVARIANCE_HPP
