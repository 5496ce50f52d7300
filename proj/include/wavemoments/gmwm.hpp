// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WAVEMOMENTS_GMWM_HPP
#define WAVEMOMENTS_GMWM_HPP

/** @file
 * Generalized method of wavelet moments.  Given an estimated WV vector
 * nu-hat (standard or robust), the estimator minimizes
 *
 *     Q(theta) = (nu-hat - nu(theta))' Omega (nu-hat - nu(theta))
 *
 * over the unconstrained coordinates of model.hpp.  With a robust nu-hat
 * this is the robust variant; nothing else changes.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "wavemoments/covariance.hpp"
#include "wavemoments/error.hpp"
#include "wavemoments/model.hpp"
#include "wavemoments/model_wv.hpp"
#include "wavemoments/optimize.hpp"
#include "wavemoments/random.hpp"
#include "wavemoments/wavelet.hpp"
#include "wavemoments/wv.hpp"

namespace wavemoments {

enum class OmegaKind { diagonal, identity, full };

inline std::string to_string(OmegaKind k) {
  switch (k) {
    case OmegaKind::diagonal: return "diag";
    case OmegaKind::identity: return "identity";
    case OmegaKind::full: return "full";
  }
  return "?";
}

inline OmegaKind parse_omega_kind(std::string_view s) {
  if (s == "diag" || s == "diagonal") return OmegaKind::diagonal;
  if (s == "identity") return OmegaKind::identity;
  if (s == "full") return OmegaKind::full;
  throw ConfigError("unknown weighting matrix '" + std::string(s) + "'", "bad_omega");
}

/// V-hat = T * Var(nu-hat) from an estimate that carries a covariance.
inline Eigen::MatrixXd long_run_covariance(const WvEstimate& wv) {
  if (!wv.has_covariance()) {
    throw ConfigError("this weighting matrix needs a WV covariance estimate",
                      "missing_covariance");
  }
  return static_cast<double>(wv.source_length) * wv.covariance;
}

/// Builds Omega.  The diagonal kind uses 1 / max(V_jj, floor) with the floor
/// relative to the largest diagonal entry; the full kind inverts V with
/// eigenvalues clipped at the same relative floor.
inline Eigen::MatrixXd weighting_matrix(const WvEstimate& wv, OmegaKind kind,
                                        double relative_floor = 1e-12) {
  const int J = wv.levels();
  if (kind == OmegaKind::identity) return Eigen::MatrixXd::Identity(J, J);
  const Eigen::MatrixXd V = long_run_covariance(wv);
  const double top = V.diagonal().maxCoeff();
  if (!(top > 0.0)) {
    throw NumericalError("WV covariance has no positive variance", "degenerate_covariance");
  }
  const double floor = relative_floor * top;
  if (kind == OmegaKind::diagonal) {
    Eigen::VectorXd d(J);
    for (int j = 0; j < J; ++j) d(j) = 1.0 / std::max(V(j, j), floor);
    return d.asDiagonal();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (V + V.transpose()));
  const Eigen::VectorXd inv = eig.eigenvalues().cwiseMax(floor).cwiseInverse();
  Eigen::MatrixXd out = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

/// Q = e' Omega e with e = nu_hat - nu_model.
inline double objective(const std::vector<double>& nu_hat, const std::vector<double>& nu_model,
                        const Eigen::MatrixXd& omega) {
  if (nu_hat.size() != nu_model.size() ||
      omega.rows() != static_cast<Eigen::Index>(nu_hat.size()) || omega.cols() != omega.rows()) {
    throw ConfigError("objective: dimension mismatch", "dimension_mismatch");
  }
  Eigen::VectorXd e(static_cast<Eigen::Index>(nu_hat.size()));
  for (std::size_t j = 0; j < nu_hat.size(); ++j) {
    e(static_cast<Eigen::Index>(j)) = nu_hat[j] - nu_model[j];
  }
  return std::max(0.0, e.dot(omega * e));
}

struct JTest {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  /// False when Omega is not a consistent estimate of V^-1, in which case
  /// the chi-squared reference distribution is only indicative.
  bool nominal = false;
};

/// Overidentification test: T * Q against chi-squared with J - p degrees.
inline JTest j_test(double q, std::size_t T, int J, int p, bool full_weighting) {
  if (J <= p) {
    throw ConfigError("saturated model, J-test undefined (J = " + std::to_string(J) +
                          ", p = " + std::to_string(p) + ")",
                      "saturated_model");
  }
  JTest t;
  t.statistic = static_cast<double>(T) * q;
  t.df = J - p;
  t.p_value = boost::math::cdf(
      boost::math::complement(boost::math::chi_squared_distribution<double>(t.df), t.statistic));
  t.nominal = full_weighting;
  return t;
}

struct FitOptions {
  OmegaKind omega = OmegaKind::diagonal;
  int starts = 5;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  NelderMeadOptions nelder_mead{};
  bool polish = true;
  bool compute_covariance = true;
  /// Used instead of a built Omega when set.
  std::optional<Eigen::MatrixXd> custom_omega;
};

struct FitDiagnostics {
  int iterations = 0;
  int evaluations = 0;
  int starts = 0;
  int converged_starts = 0;
  bool starts_agree = true;
  double simplex_size = 0.0;
  std::vector<double> start_objectives;
};

struct FitResult {
  ModelSpec model;
  std::vector<std::string> names;
  std::vector<double> theta;
  double objective = 0.0;
  OmegaKind omega_kind = OmegaKind::diagonal;
  Eigen::MatrixXd omega;
  Eigen::MatrixXd covariance;  // p x p, empty unless computed
  std::vector<double> std_error, ci_lower, ci_upper;
  double alpha = 0.05;
  std::optional<JTest> jtest;
  std::string jtest_note;
  std::string covariance_note;  // set when H is singular at theta-hat
  std::vector<double> nu2_hat, nu2_model;
  std::size_t source_length = 0;
  FitDiagnostics diagnostics;
};

namespace detail {

/// Rough moment-matched start: every component explains an equal share of
/// nu-hat at the level where it dominates (level 1 for noise-like parts,
/// level J for RW and drift, spread-out levels for repeated AR1 terms).
inline ModelSpec heuristic_start(const ModelSpec& shape, const std::vector<double>& nu_hat,
                                 WaveletFamily family) {
  const int J = static_cast<int>(nu_hat.size());
  ModelSpec m = shape;
  const double share = 1.0 / static_cast<double>(m.components.size());
  int n_ar1 = 0;
  for (const auto& c : m.components) n_ar1 += c.kind == ComponentKind::ar1;
  int k_ar1 = 0;
  for (auto& c : m.components) {
    c.params.assign(c.size(), 0.0);
    int level = 1;
    switch (c.kind) {
      case ComponentKind::rw:
      case ComponentKind::dr: level = J; break;
      case ComponentKind::ar1: {
        ++k_ar1;
        level = std::clamp(static_cast<int>(std::lround(static_cast<double>(J) * k_ar1 / (n_ar1 + 1))), 1, J);
        // Decreasing in k so that the canonical order is kept.
        const int lev = std::clamp(J + 1 - level, 1, J);
        c.params[0] = std::exp(-1.0 / std::ldexp(1.0, lev));
        level = lev;
        break;
      }
      default: break;
    }
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c.role(i) == ParamRole::variance || c.role(i) == ParamRole::real) c.params[i] = 1.0;
    }
    const double unit = component_wv(c, *level_filter_info(family, level));
    const double target = share * nu_hat[static_cast<std::size_t>(level - 1)];
    const double ratio = unit > 0.0 && target > 0.0 ? target / unit : 1.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c.role(i) == ParamRole::variance) c.params[i] = ratio;
      if (c.role(i) == ParamRole::real) c.params[i] = std::sqrt(ratio);
    }
  }
  return m;
}

/// Additional starts by Latin hypercube sampling around the heuristic start
/// in unconstrained coordinates.
inline std::vector<std::vector<double>> latin_hypercube_starts(const ModelSpec& shape,
                                                               const std::vector<double>& centre,
                                                               int count, Stream stream) {
  const auto roles = shape.roles();
  const std::size_t p = centre.size();
  auto rng = stream.engine();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(count), centre);
  for (std::size_t i = 0; i < p; ++i) {
    std::vector<int> strata(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) strata[static_cast<std::size_t>(k)] = k;
    std::shuffle(strata.begin(), strata.end(), rng);
    double lo = 0.0, hi = 0.0;
    switch (roles[i]) {
      case ParamRole::variance: lo = centre[i] - 3.0, hi = centre[i] + 3.0; break;
      case ParamRole::ar:
      case ParamRole::ma: lo = -2.5, hi = 2.5; break;
      case ParamRole::real: {
        const double w = 3.0 * std::max(std::abs(centre[i]), 1e-8);
        lo = centre[i] - w, hi = centre[i] + w;
        break;
      }
    }
    for (int k = 0; k < count; ++k) {
      const double u = (strata[static_cast<std::size_t>(k)] + unit(rng)) / count;
      out[static_cast<std::size_t>(k)][i] = lo + u * (hi - lo);
    }
  }
  return out;
}

inline double relative_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double g = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    g = std::max(g, std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), 1e-8));
  }
  return g;
}

}  // namespace detail

/// Var(theta-hat) = B Var(nu-hat) B' with B = H^-1 A' Omega, H = A' Omega A.
/// Throws NumericalError naming the parameters involved when H is singular.
inline Eigen::MatrixXd parameter_covariance(const ModelSpec& model, const Eigen::MatrixXd& omega,
                                            const Eigen::MatrixXd& nu_covariance,
                                            WaveletFamily family = WaveletFamily::haar) {
  const int J = static_cast<int>(omega.rows());
  const Eigen::MatrixXd A = jacobian(model, J, family);
  const Eigen::MatrixXd H = A.transpose() * omega * A;
  const Eigen::VectorXd d = H.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd Hs = d.asDiagonal() * H * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Hs);
  if (eig.eigenvalues()(0) < 1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff())) {
    const auto names = model.names();
    const Eigen::VectorXd v = eig.eigenvectors().col(0);
    std::string involved;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (std::abs(v(i)) > 0.1) {
        involved += (involved.empty() ? "" : ", ") + names[static_cast<std::size_t>(i)];
      }
    }
    throw NumericalError("H = A'Omega A is singular; near-collinear parameters: " + involved,
                         "rank_deficient");
  }
  const Eigen::MatrixXd Hinv = d.asDiagonal() * eig.eigenvectors() *
                               eig.eigenvalues().cwiseInverse().asDiagonal() *
                               eig.eigenvectors().transpose() * d.asDiagonal();
  const Eigen::MatrixXd B = Hinv * A.transpose() * omega;
  const Eigen::MatrixXd C = B * nu_covariance * B.transpose();
  return 0.5 * (C + C.transpose());
}

/// Fits `shape` (values ignored) to the WV estimate.
inline FitResult fit(const WvEstimate& wv, const ModelSpec& shape, const FitOptions& opt = {}) {
  const int J = wv.levels();
  const int p = static_cast<int>(shape.size());
  if (p > J) {
    throw ConfigError("model has " + std::to_string(p) + " parameters but only " +
                          std::to_string(J) + " scales are available (p > J)",
                      "under_identified");
  }
  if (opt.starts < 1) throw ConfigError("at least one start is required", "bad_starts");
  check_compatible(shape, wv.family);
  FitResult res;
  res.omega_kind = opt.omega;
  res.omega = opt.custom_omega ? *opt.custom_omega : weighting_matrix(wv, opt.omega);
  if (res.omega.rows() != J || res.omega.cols() != J) {
    throw ConfigError("weighting matrix must be J x J", "dimension_mismatch");
  }
  res.nu2_hat = wv.nu2;
  res.source_length = wv.source_length;
  res.alpha = opt.alpha;

  const Eigen::LLT<Eigen::MatrixXd> llt(res.omega);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("weighting matrix is not positive definite", "bad_omega");
  }
  const Eigen::MatrixXd Lt = llt.matrixL().transpose();
  const Eigen::VectorXd nu_hat = wv.nu2_vector();

  auto model_nu = [&](const std::vector<double>& u) {
    return theoretical_wv(from_unconstrained(shape, u), J, wv.family);
  };
  auto q_of = [&](const std::vector<double>& u) {
    return objective(wv.nu2, model_nu(u), res.omega);
  };

  const auto centre = to_unconstrained(detail::heuristic_start(shape, wv.nu2, wv.family));
  std::vector<std::vector<double>> starts{centre};
  if (opt.starts > 1) {
    const auto lhs = detail::latin_hypercube_starts(shape, centre, opt.starts - 1,
                                                    Stream{opt.seed, 0x6d6d});
    starts.insert(starts.end(), lhs.begin(), lhs.end());
  }
  const auto roles = shape.roles();
  std::vector<double> step(static_cast<std::size_t>(p));
  for (std::size_t i = 0; i < step.size(); ++i) {
    step[i] = roles[i] == ParamRole::real ? 0.1 * std::max(std::abs(centre[i]), 1e-6) : 0.5;
  }

  std::vector<MinimizeResult> runs;
  for (const auto& s : starts) runs.push_back(nelder_mead(q_of, s, step, opt.nelder_mead));
  std::size_t best = 0;
  for (std::size_t k = 1; k < runs.size(); ++k) {
    if (runs[k].f < runs[best].f) best = k;
  }
  auto& diag = res.diagnostics;
  diag.starts = static_cast<int>(runs.size());
  for (const auto& r : runs) {
    diag.iterations += r.iterations;
    diag.evaluations += r.evaluations;
    diag.converged_starts += r.converged;
    diag.start_objectives.push_back(r.f);
  }
  diag.simplex_size = runs[best].simplex_size;

  std::vector<double> u_best = runs[best].x;
  double q_best = runs[best].f;
  bool polished = false;
  if (opt.polish && p > 0) {
    auto residual = [&](const std::vector<double>& u) -> Eigen::VectorXd {
      const auto nu = model_nu(u);
      Eigen::VectorXd e(J);
      for (int j = 0; j < J; ++j) e(j) = nu_hat(j) - nu[static_cast<std::size_t>(j)];
      return Lt * e;
    };
    const auto lm = levenberg_marquardt(residual, u_best);
    diag.evaluations += lm.evaluations;
    const double q_lm = q_of(lm.x);
    if (q_lm <= q_best) {
      u_best = lm.x;
      q_best = q_lm;
      polished = lm.converged;
    }
  }
  if (!std::isfinite(q_best) || (diag.converged_starts == 0 && !polished)) {
    throw NumericalError("optimizer did not converge from any of " + std::to_string(diag.starts) +
                             " starts (best Q = " + std::to_string(q_best) + ", " +
                             std::to_string(diag.evaluations) + " evaluations)",
                         "no_convergence");
  }
  // Agreement of the restarts, judged on the constrained parameters.
  const auto theta_best = from_unconstrained(shape, u_best).theta();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const double qk = runs[k].f;
    const bool same_f = qk <= q_best * (1.0 + 1e-6) + 1e-300;
    const bool same_x =
        detail::relative_gap(from_unconstrained(shape, runs[k].x).theta(), theta_best) < 1e-3;
    if (!(same_f && same_x)) diag.starts_agree = false;
  }

  res.model = from_unconstrained(shape, u_best);
  canonicalize(res.model);
  res.theta = res.model.theta();
  res.names = res.model.names();
  res.objective = q_best;
  res.nu2_model = theoretical_wv(res.model, J, wv.family);

  const bool full = opt.omega == OmegaKind::full && !opt.custom_omega;
  try {
    res.jtest = j_test(res.objective, wv.source_length, J, p, full);
    if (!full) res.jtest_note = "weighting matrix is not V^-1; chi-squared reference is approximate";
  } catch (const ConfigError& e) {
    res.jtest_note = e.what();
  }

  if (opt.compute_covariance && wv.has_covariance()) {
    try {
      res.covariance = parameter_covariance(res.model, res.omega, wv.covariance, wv.family);
    } catch (const NumericalError& e) {
      if (e.code() != "rank_deficient") throw;
      res.covariance_note = e.what();
      return res;
    }
    const double z = boost::math::quantile(
        boost::math::complement(boost::math::normal_distribution<double>(), opt.alpha / 2.0));
    for (int i = 0; i < p; ++i) {
      const double se = std::sqrt(std::max(0.0, res.covariance(i, i)));
      res.std_error.push_back(se);
      res.ci_lower.push_back(res.theta[static_cast<std::size_t>(i)] - z * se);
      res.ci_upper.push_back(res.theta[static_cast<std::size_t>(i)] + z * se);
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Series-level pipeline

struct PipelineOptions {
  PsiSpec psi = default_psi();
  WaveletFamily family = WaveletFamily::haar;
  int levels = 0;  // 0: all admissible levels
  CovarianceOptions covariance{};
  FitOptions fit{};
};

/// Number of levels used for a series of length T.
inline int default_levels(std::size_t T, WaveletFamily family, const PsiSpec& psi,
                          const RobustOptions& robust = {}) {
  return max_scales(T, family, psi.is_identity() ? 1 : robust.min_coefficients);
}

/// Decomposes and estimates the WV with a covariance from a non-parametric
/// method (or none for the parametric method, which needs a fitted model).
inline WvEstimate estimate_series_wv(const TimeSeries& x, const PipelineOptions& opt,
                                     bool with_covariance = true) {
  validate(x);
  const int J = opt.levels > 0 ? opt.levels
                               : default_levels(x.size(), opt.family, opt.psi, opt.covariance.robust);
  const auto pyr = decompose(x, J, opt.family);
  auto est = estimate_wv(pyr, opt.psi, opt.covariance.robust);
  if (with_covariance) {
    auto cov = opt.covariance;
    if (cov.method == CovarianceMethod::parametric) cov.method = CovarianceMethod::batched_means;
    est.covariance = estimate_wv_covariance(x, pyr, est, cov);
    wv_confidence_intervals(est, opt.fit.alpha);
  }
  return est;
}

struct SeriesFit {
  WvEstimate wv;
  FitResult fit;
  std::optional<FitResult> preliminary;  // set for the parametric method
};

/// Full pipeline.  With the parametric covariance method a preliminary fit
/// (batched-means covariance, diagonal Omega) supplies theta for the simulation of V-hat,
/// and the model is refitted with that V-hat.
inline SeriesFit fit_series(const TimeSeries& x, const ModelSpec& shape,
                            const PipelineOptions& opt) {
  SeriesFit out;
  out.wv = estimate_series_wv(x, opt);
  if (opt.covariance.method != CovarianceMethod::parametric) {
    out.fit = fit(out.wv, shape, opt.fit);
    return out;
  }
  auto prelim_opt = opt.fit;
  prelim_opt.compute_covariance = false;
  prelim_opt.omega = OmegaKind::diagonal;
  out.preliminary = fit(out.wv, shape, prelim_opt);
  out.wv.covariance = parametric_covariance(out.preliminary->model, x.size(), out.wv.levels(),
                                            opt.psi, opt.covariance, opt.family);
  wv_confidence_intervals(out.wv, opt.fit.alpha);
  out.fit = fit(out.wv, shape, opt.fit);
  return out;
}

struct CompareEntry {
  std::string model;
  bool ok = false;
  std::string error_code, error;
  FitResult fit;
  std::vector<double> residuals;  // nu-hat_j - nu_j(theta-hat)
};

struct CompareReport {
  WvEstimate wv;
  bool shared_omega = true;
  std::vector<CompareEntry> entries;
};

/// Fits every candidate to the same first-step WV estimate.  With a shared
/// Omega all candidates use the same model-free weighting matrix and are
/// ranked by Q; otherwise each candidate gets its own parametric V-hat at a
/// preliminary fit and the ranking uses the J-test p-value.  Failing
/// candidates are reported, not thrown.
inline CompareReport model_compare(const TimeSeries& x, const std::vector<ModelSpec>& shapes,
                                   const PipelineOptions& opt, bool shared_omega = true) {
  if (shapes.size() < 2) throw ConfigError("model comparison needs at least 2 candidates", "bad_models");
  CompareReport rep;
  rep.shared_omega = shared_omega;
  rep.wv = estimate_series_wv(x, opt);
  for (const auto& shape : shapes) {
    CompareEntry e;
    e.model = format_model(shape);
    try {
      if (shared_omega) {
        e.fit = fit(rep.wv, shape, opt.fit);
      } else {
        auto prelim_opt = opt.fit;
        prelim_opt.compute_covariance = false;
        prelim_opt.omega = OmegaKind::diagonal;
        const auto prelim = fit(rep.wv, shape, prelim_opt);
        WvEstimate own = rep.wv;
        own.covariance = parametric_covariance(prelim.model, x.size(), own.levels(), opt.psi,
                                               opt.covariance, opt.family);
        e.fit = fit(own, shape, opt.fit);
      }
      e.ok = true;
      for (std::size_t j = 0; j < rep.wv.nu2.size(); ++j) {
        e.residuals.push_back(rep.wv.nu2[j] - e.fit.nu2_model[j]);
      }
    } catch (const Error& err) {
      e.error_code = err.code();
      e.error = err.what();
    }
    rep.entries.push_back(std::move(e));
  }
  std::stable_sort(rep.entries.begin(), rep.entries.end(),
                   [shared_omega](const CompareEntry& a, const CompareEntry& b) {
                     if (a.ok != b.ok) return a.ok;
                     if (!a.ok) return false;
                     if (shared_omega) return a.fit.objective < b.fit.objective;
                     const double pa = a.fit.jtest ? a.fit.jtest->p_value : -1.0;
                     const double pb = b.fit.jtest ? b.fit.jtest->p_value : -1.0;
                     return pa > pb;
                   });
  return rep;
}

}  // namespace wavemoments

#endif  // WAVEMOMENTS_GMWM_HPP
