// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WAVEMOMENTS_LAB_HPP
#define WAVEMOMENTS_LAB_HPP

/** @file
 * Robustness experiments: contamination generators, the RMSE* score,
 * replicated scenario runs comparing GMWM with RGMWM, outlier flags from
 * robust weights and empirical sensitivity curves.
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "wavemoments/error.hpp"
#include "wavemoments/gmwm.hpp"
#include "wavemoments/model.hpp"
#include "wavemoments/parallel.hpp"
#include "wavemoments/psi.hpp"
#include "wavemoments/random.hpp"
#include "wavemoments/simulate.hpp"
#include "wavemoments/wavelet.hpp"
#include "wavemoments/wv.hpp"

namespace wavemoments {

enum class ContaminationKind { none, isolated, patchy, level_shift, scale_based };

inline std::string to_string(ContaminationKind k) {
  switch (k) {
    case ContaminationKind::none: return "none";
    case ContaminationKind::isolated: return "isolated";
    case ContaminationKind::patchy: return "patchy";
    case ContaminationKind::level_shift: return "level-shift";
    case ContaminationKind::scale_based: return "scale-based";
  }
  return "?";
}

inline ContaminationKind parse_contamination_kind(std::string_view s) {
  if (s == "none" || s == "clean") return ContaminationKind::none;
  if (s == "isolated" || s == "isolated-additive") return ContaminationKind::isolated;
  if (s == "patchy") return ContaminationKind::patchy;
  if (s == "level-shift") return ContaminationKind::level_shift;
  if (s == "scale-based" || s == "scale") return ContaminationKind::scale_based;
  throw ConfigError("unknown contamination kind '" + std::string(s) + "'", "bad_contamination");
}

struct ContaminationSpec {
  ContaminationKind kind = ContaminationKind::none;
  double epsilon = 0.0;
  double sigma2 = 0.0;             // isolated, patchy, scale-based
  std::size_t patch_length = 5;    // patchy
  std::vector<double> shifts;      // level-shift, one per segment
  int level = 1;                   // scale-based
};

inline void validate(const ContaminationSpec& c) {
  auto bad = [](const std::string& m) { throw ConfigError(m, "bad_contamination"); };
  if (!(c.epsilon >= 0.0 && c.epsilon < 0.5)) bad("contamination fraction must lie in [0, 0.5)");
  switch (c.kind) {
    case ContaminationKind::none: break;
    case ContaminationKind::isolated:
    case ContaminationKind::scale_based:
    case ContaminationKind::patchy:
      if (!(c.sigma2 > 0.0) || !std::isfinite(c.sigma2)) bad("contamination size sigma2 must be positive");
      if (c.kind == ContaminationKind::patchy && c.patch_length == 0) bad("patch length must be positive");
      if (c.kind == ContaminationKind::scale_based && c.level < 1) bad("scale-based level must be >= 1");
      break;
    case ContaminationKind::level_shift:
      if (c.shifts.empty()) bad("level-shift contamination needs at least one shift size");
      for (double m : c.shifts) {
        if (!std::isfinite(m)) bad("shift sizes must be finite");
      }
      break;
  }
}

/// Number of contaminated positions, ceil(epsilon T), robust to the binary
/// representation of epsilon (0.01 * 1000 is 10, not 11).
inline std::size_t contaminated_count(double epsilon, std::size_t T) {
  const double raw = epsilon * static_cast<double>(T);
  const double r = std::round(raw);
  if (std::abs(raw - r) < 1e-9 * std::max(1.0, raw)) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(raw));
}

namespace detail {

/// Places runs of the given lengths at random, non-overlapping and
/// non-adjacent, keeping their order.  Returns run starts.
inline std::vector<std::size_t> place_runs(const std::vector<std::size_t>& lengths, std::size_t T,
                                           std::mt19937_64& rng) {
  const std::size_t k = lengths.size();
  const std::size_t used = std::accumulate(lengths.begin(), lengths.end(), std::size_t{0});
  if (k == 0) return {};
  if (used + (k - 1) > T) {
    throw ConfigError("contamination runs do not fit in a series of length " + std::to_string(T),
                      "bad_contamination");
  }
  // Stars and bars: distribute the free slots over k + 1 gaps.
  const std::size_t free = T - used - (k - 1);
  std::vector<std::size_t> bars(free + k);
  std::iota(bars.begin(), bars.end(), std::size_t{0});
  std::vector<std::size_t> chosen;
  std::sample(bars.begin(), bars.end(), std::back_inserter(chosen), k, rng);
  std::sort(chosen.begin(), chosen.end());
  std::vector<std::size_t> starts(k);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t gap = chosen[i] - (i == 0 ? 0 : chosen[i - 1] + 1);
    pos += gap;
    starts[i] = pos;
    pos += lengths[i] + 1;
  }
  return starts;
}

inline std::vector<std::size_t> split_evenly(std::size_t n, std::size_t parts) {
  std::vector<std::size_t> out(parts, n / parts);
  for (std::size_t i = 0; i < n % parts; ++i) ++out[i];
  return out;
}

}  // namespace detail

/// Adds contamination to a copy of x.  Exactly contaminated_count(eps, T)
/// positions change (up to an addend that happens to be exactly zero).
///   isolated     N(0, sigma2) at uniformly drawn distinct positions
///   patchy       N(0, sigma2) on runs of patch_length points
///   level-shift  shifts[i] on the i-th of equal contiguous segments
///   scale-based  runs of length 2^level carrying a Haar-shaped bump
///                (+a on the first half, -a on the second, a ~ N(0, sigma2)),
///                whose energy sits at that level; a short last run keeps
///                the count exact
inline TimeSeries contaminate(const TimeSeries& x, const ContaminationSpec& spec, Stream stream) {
  validate(x);
  validate(spec);
  TimeSeries y = x;
  const std::size_t T = x.size();
  const std::size_t n = spec.kind == ContaminationKind::none ? 0 : contaminated_count(spec.epsilon, T);
  if (n == 0) return y;
  auto rng = stream.engine();
  std::normal_distribution<double> noise(0.0, std::sqrt(spec.sigma2 > 0.0 ? spec.sigma2 : 1.0));
  switch (spec.kind) {
    case ContaminationKind::none: break;
    case ContaminationKind::isolated: {
      std::vector<std::size_t> idx(T);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::vector<std::size_t> chosen;
      std::sample(idx.begin(), idx.end(), std::back_inserter(chosen), n, rng);
      for (std::size_t t : chosen) y.values[t] += noise(rng);
      break;
    }
    case ContaminationKind::patchy: {
      const std::size_t runs = (n + spec.patch_length - 1) / spec.patch_length;
      const auto lengths = detail::split_evenly(n, runs);
      const auto starts = detail::place_runs(lengths, T, rng);
      for (std::size_t r = 0; r < runs; ++r) {
        for (std::size_t i = 0; i < lengths[r]; ++i) y.values[starts[r] + i] += noise(rng);
      }
      break;
    }
    case ContaminationKind::level_shift: {
      const std::size_t segs = std::min(spec.shifts.size(), n);
      const auto lengths = detail::split_evenly(n, segs);
      const auto starts = detail::place_runs(lengths, T, rng);
      for (std::size_t s = 0; s < segs; ++s) {
        for (std::size_t i = 0; i < lengths[s]; ++i) y.values[starts[s] + i] += spec.shifts[s];
      }
      break;
    }
    case ContaminationKind::scale_based: {
      const std::size_t L = std::size_t{1} << std::min(spec.level, 30);
      std::vector<std::size_t> lengths(n / L, L);
      if (n % L) lengths.push_back(n % L);
      const auto starts = detail::place_runs(lengths, T, rng);
      for (std::size_t r = 0; r < lengths.size(); ++r) {
        const double a = noise(rng);
        for (std::size_t i = 0; i < lengths[r]; ++i) {
          y.values[starts[r] + i] += i < L / 2 ? a : -a;
        }
      }
      break;
    }
  }
  return y;
}

// ---------------------------------------------------------------------------
// RMSE*

namespace detail {

inline double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2), v.end());
  const double hi = v[n / 2];
  if (n % 2) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2));
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline constexpr double kMadScale = 1.4826;

/// Normalized median absolute deviation.
inline double mad(const std::vector<double>& v) {
  const double m = detail::median(v);
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = std::abs(v[i] - m);
  return kMadScale * detail::median(dev);
}

namespace detail {

inline std::vector<double> rmse_star_any(const std::vector<std::vector<double>>& estimates,
                                         const std::vector<double>& theta0,
                                         const std::vector<std::string>& names);

}  // namespace detail

/// Per parameter sqrt(med(rel err)^2 + mad(ratio)^2) over the estimates.
inline std::vector<double> rmse_star(const std::vector<std::vector<double>>& estimates,
                                     const std::vector<double>& theta0,
                                     const std::vector<std::string>& names = {}) {
  if (estimates.size() < 2) throw ConfigError("RMSE* needs at least 2 estimates", "too_few_estimates");
  return detail::rmse_star_any(estimates, theta0, names);
}

/// Same score for one or more estimates; a single estimate has mad 0.
inline std::vector<double> detail::rmse_star_any(const std::vector<std::vector<double>>& estimates,
                                                 const std::vector<double>& theta0,
                                                 const std::vector<std::string>& names) {
  if (estimates.empty()) throw ConfigError("RMSE* needs at least 1 estimate", "too_few_estimates");
  std::vector<double> out;
  for (std::size_t i = 0; i < theta0.size(); ++i) {
    if (theta0[i] == 0.0) {
      throw ConfigError("RMSE* is relative; true value of " +
                            (i < names.size() ? names[i] : "parameter " + std::to_string(i)) +
                            " is zero",
                        "zero_true_parameter");
    }
    std::vector<double> rel, ratio;
    for (const auto& e : estimates) {
      if (e.size() != theta0.size()) throw ConfigError("estimate dimension mismatch", "dimension_mismatch");
      rel.push_back((e[i] - theta0[i]) / theta0[i]);
      ratio.push_back(e[i] / theta0[i]);
    }
    out.push_back(std::hypot(detail::median(rel), mad(ratio)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenarios

struct EstimatorConfig {
  std::string name;
  PsiSpec psi;
};

inline std::vector<EstimatorConfig> default_estimators(const PsiSpec& robust = default_psi()) {
  return {{"GMWM", identity_psi()}, {"RGMWM", robust}};
}

struct ScenarioConfig {
  std::string id = "scenario";
  ModelSpec model;  // with true values
  ContaminationSpec contamination;
  std::size_t length = 1000;
  std::size_t replicates = 500;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  OmegaKind omega = OmegaKind::diagonal;
  CovarianceMethod covariance = CovarianceMethod::batched_means;
  int starts = 5;
  bool include_clean = true;
  std::vector<EstimatorConfig> estimators = default_estimators();
};

struct ReplicateRecord {
  std::size_t replicate = 0;
  std::string setting;     // clean or contaminated
  std::string estimator;
  bool ok = false;
  std::string error_code;
  std::vector<double> theta;
};

struct EstimatorSummary {
  std::string setting;
  std::string estimator;
  std::size_t succeeded = 0, failed = 0;
  std::vector<double> rmse_star;
  std::vector<double> median_estimate;
};

struct ScenarioReport {
  ScenarioConfig config;
  std::vector<std::string> names;
  std::vector<double> theta0;
  std::vector<EstimatorSummary> summaries;
  std::vector<ReplicateRecord> records;
  double runtime_seconds = 0.0;

  const EstimatorSummary* find(std::string_view setting, std::string_view estimator) const {
    for (const auto& s : summaries) {
      if (s.setting == setting && s.estimator == estimator) return &s;
    }
    return nullptr;
  }
};

/// Fits one replicate series with one estimator: WV, WV covariance for the
/// weighting matrix, then the GMWM fit.
inline FitResult fit_replicate(const TimeSeries& x, const ModelSpec& shape, const PsiSpec& psi,
                               const ScenarioConfig& cfg, Stream stream) {
  PipelineOptions opt;
  opt.psi = psi;
  opt.covariance.method = cfg.covariance;
  opt.covariance.stream = stream;
  opt.covariance.threads = 1;
  opt.fit.omega = cfg.omega;
  opt.fit.starts = cfg.starts;
  opt.fit.seed = stream.child(0).seed;
  opt.fit.compute_covariance = false;
  return fit_series(x, shape, opt).fit;
}

/// Replicate r simulates from stream (seed, r), contaminates with its child
/// stream, and each estimator fits both the clean and the contaminated
/// series.  Output is independent of the thread count.
inline ScenarioReport run_scenario(const ScenarioConfig& cfg) {
  if (cfg.replicates == 0) throw ConfigError("replicates must be positive", "bad_replicates");
  if (cfg.estimators.empty()) throw ConfigError("no estimators configured", "bad_estimators");
  validate(cfg.model);
  validate(cfg.contamination);
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioReport rep;
  rep.config = cfg;
  rep.names = cfg.model.names();
  rep.theta0 = cfg.model.theta();

  std::vector<std::string> settings;
  if (cfg.include_clean) settings.push_back("clean");
  if (cfg.contamination.kind != ContaminationKind::none) settings.push_back("contaminated");
  if (settings.empty()) settings.push_back("clean");

  const std::size_t per_rep = settings.size() * cfg.estimators.size();
  std::vector<ReplicateRecord> records(cfg.replicates * per_rep);
  parallel_for(
      cfg.replicates,
      [&](std::size_t r) {
        const Stream base{cfg.seed, r};
        const auto clean = simulate(cfg.model, cfg.length, base.child(0));
        std::size_t slot = r * per_rep;
        for (const auto& setting : settings) {
          const TimeSeries x = setting == "clean"
                                   ? clean
                                   : contaminate(clean, cfg.contamination, base.child(1));
          for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
            auto& rec = records[slot++];
            rec.replicate = r;
            rec.setting = setting;
            rec.estimator = cfg.estimators[e].name;
            try {
              rec.theta = fit_replicate(x, cfg.model, cfg.estimators[e].psi, cfg,
                                        base.child(2 + e)).theta;
              rec.ok = true;
            } catch (const Error& err) {
              rec.error_code = err.code();
            }
          }
        }
      },
      cfg.threads);

  for (const auto& setting : settings) {
    for (const auto& est : cfg.estimators) {
      EstimatorSummary s;
      s.setting = setting;
      s.estimator = est.name;
      std::vector<std::vector<double>> good;
      for (const auto& rec : records) {
        if (rec.setting != setting || rec.estimator != est.name) continue;
        if (rec.ok) good.push_back(rec.theta); else ++s.failed;
      }
      s.succeeded = good.size();
      if (!good.empty()) {
        s.rmse_star = detail::rmse_star_any(good, rep.theta0, rep.names);
        for (std::size_t i = 0; i < rep.theta0.size(); ++i) {
          std::vector<double> col;
          for (const auto& g : good) col.push_back(g[i]);
          s.median_estimate.push_back(detail::median(col));
        }
      }
      rep.summaries.push_back(std::move(s));
    }
  }
  rep.records = std::move(records);
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// ---------------------------------------------------------------------------
// Scenario files (INI): one section per scenario, optional [defaults].
//
//   [ar1]
//   model = AR1(rho=0.9, nu2=1)
//   length = 1000
//   replicates = 500
//   contamination = scale-based
//   level = 3
//   epsilon = 0.01
//   sigma2 = 100

namespace detail {

inline std::vector<double> parse_number_list(const std::string& s, const std::string& key) {
  std::vector<double> out;
  std::string cleaned;
  for (char ch : s) cleaned += (ch == ',' || ch == '(' || ch == ')' || ch == '[' || ch == ']') ? ' ' : ch;
  std::istringstream in(cleaned);
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("'" + key + "' expects a list of numbers, got '" + s + "'", "bad_config");
    }
  }
  return out;
}

template <class V>
V ini_get(const boost::property_tree::ptree& sec, const boost::property_tree::ptree& defaults,
          const std::string& key, V fallback) {
  try {
    if (auto v = sec.get_optional<V>(key)) return *v;
    if (auto v = defaults.get_optional<V>(key)) return *v;
  } catch (const boost::property_tree::ptree_error&) {
    throw ConfigError("bad value for '" + key + "'", "bad_config");
  }
  if (sec.get_child_optional(key) || defaults.get_child_optional(key)) {
    throw ConfigError("bad value for '" + key + "'", "bad_config");
  }
  return fallback;
}

}  // namespace detail

inline std::vector<ScenarioConfig> parse_scenarios(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("scenario file: ") + e.what(), "bad_config");
  }
  const pt::ptree empty;
  const pt::ptree& defaults = tree.get_child("defaults", empty);
  static const char* known[] = {"model", "length", "replicates", "seed", "threads",
                                "contamination", "epsilon", "sigma2", "patch_length",
                                "shifts", "level", "psi", "efficiency", "c", "omega",
                                "cov", "starts", "include_clean", "estimators"};
  std::vector<ScenarioConfig> out;
  for (const auto& [name, sec] : tree) {
    if (name == "defaults") continue;
    if (sec.empty()) throw ConfigError("'" + name + "' is not a section", "bad_config");
    for (const pt::ptree* s : {&sec, &defaults}) {
      for (const auto& kv : *s) {
        if (std::find(std::begin(known), std::end(known), kv.first) == std::end(known)) {
          throw ConfigError("unknown key '" + kv.first + "' in scenario '" + name + "'", "bad_config");
        }
      }
    }
    using detail::ini_get;
    ScenarioConfig c;
    c.id = name;
    const auto model = ini_get<std::string>(sec, defaults, "model", "");
    if (model.empty()) throw ConfigError("scenario '" + name + "' has no model", "bad_config");
    const auto parsed = parse_model(model);
    if (!parsed.has_values) {
      throw ConfigError("scenario '" + name + "' needs parameter values in its model", "bad_config");
    }
    c.model = parsed.model;
    c.length = ini_get<std::size_t>(sec, defaults, "length", c.length);
    c.replicates = ini_get<std::size_t>(sec, defaults, "replicates", c.replicates);
    c.seed = ini_get<std::uint64_t>(sec, defaults, "seed", c.seed);
    c.threads = ini_get<unsigned>(sec, defaults, "threads", c.threads);
    c.starts = ini_get<int>(sec, defaults, "starts", c.starts);
    c.include_clean = ini_get<bool>(sec, defaults, "include_clean", c.include_clean);
    auto& k = c.contamination;
    k.kind = parse_contamination_kind(ini_get<std::string>(sec, defaults, "contamination", "none"));
    k.epsilon = ini_get<double>(sec, defaults, "epsilon", 0.0);
    k.sigma2 = ini_get<double>(sec, defaults, "sigma2", 0.0);
    k.patch_length = ini_get<std::size_t>(sec, defaults, "patch_length", k.patch_length);
    k.level = ini_get<int>(sec, defaults, "level", k.level);
    const auto shifts = ini_get<std::string>(sec, defaults, "shifts", "");
    if (!shifts.empty()) k.shifts = detail::parse_number_list(shifts, "shifts");
    validate(k);
    const auto kind = parse_psi_kind(ini_get<std::string>(sec, defaults, "psi", "tukey"));
    PsiSpec robust;
    if (kind == PsiKind::identity) {
      robust = identity_psi();
    } else if (auto cval = ini_get<double>(sec, defaults, "c", 0.0); cval > 0.0) {
      robust = psi_with_c(kind, cval);
    } else {
      robust = psi_with_efficiency(kind, ini_get<double>(sec, defaults, "efficiency", 0.6));
    }
    c.estimators.clear();
    std::string names = ini_get<std::string>(sec, defaults, "estimators", "GMWM, RGMWM");
    for (char& ch : names) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream list(names);
    for (std::string e; list >> e;) {
      if (e == "GMWM") {
        c.estimators.push_back({e, identity_psi()});
      } else if (e == "RGMWM") {
        c.estimators.push_back({e, robust});
      } else {
        throw ConfigError("unknown estimator '" + e + "' in scenario '" + name +
                              "' (expected GMWM or RGMWM)",
                          "bad_estimator");
      }
    }
    if (c.estimators.empty()) throw ConfigError("scenario '" + name + "' lists no estimators", "bad_estimator");
    c.omega = parse_omega_kind(ini_get<std::string>(sec, defaults, "omega", "diag"));
    c.covariance = parse_covariance_method(ini_get<std::string>(sec, defaults, "cov", "batched"));
    if (c.covariance == CovarianceMethod::parametric) {
      throw ConfigError("scenario runs support batched or block-bootstrap covariance", "bad_config");
    }
    out.push_back(std::move(c));
  }
  if (out.empty()) throw ConfigError("scenario file defines no scenarios", "bad_config");
  return out;
}

// ---------------------------------------------------------------------------
// Outlier flags

struct OutlierFlag {
  std::size_t time = 0;
  double min_weight = 1.0;
  std::vector<int> levels;  // levels with a covering weight below threshold
};

/// Flags time t when the smallest squared weight over the level 1..j_max
/// coefficients whose support covers t is below threshold.  Coefficient i
/// of level j covers times i .. i + L_j - 1.
inline std::vector<OutlierFlag> outlier_flags(const WvEstimate& wv, double threshold = 0.1,
                                              int j_max = 2) {
  if (!wv.robust() || wv.weights.empty()) {
    throw ConfigError("robust weights required for outlier flags", "robust_weights_required");
  }
  if (j_max < 1) throw ConfigError("j_max must be >= 1", "bad_level");
  const std::size_t T = wv.source_length;
  const int top = std::min(j_max, wv.levels());
  std::vector<double> min_w(T, 1.0);
  std::vector<std::vector<int>> lev(T);
  for (int j = 1; j <= top; ++j) {
    const auto& w = wv.weights[static_cast<std::size_t>(j - 1)];
    const std::size_t L = filter_length(wv.family, j);
    // Sliding minimum over the coefficients covering each t.
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t lo = t + 1 >= L ? t + 1 - L : 0;
      const std::size_t hi = std::min(t, w.size() - 1);
      double m = 1.0;
      for (std::size_t i = lo; i <= hi && i < w.size(); ++i) m = std::min(m, w[i]);
      min_w[t] = std::min(min_w[t], m);
      if (m < threshold) lev[t].push_back(j);
    }
  }
  std::vector<OutlierFlag> out;
  for (std::size_t t = 0; t < T; ++t) {
    if (min_w[t] < threshold) out.push_back({t, min_w[t], lev[t]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sensitivity curve

struct SensitivityCurve {
  std::size_t index = 0;  // replaced observation
  double baseline_standard = 0.0, baseline_robust = 0.0;
  std::vector<double> probes, standard, robust;
};

/// Level-1 WV of x with observation ceil(T/2) (1-based) replaced by each
/// probe, for the standard and the robust estimator.
inline SensitivityCurve sensitivity_curve(const TimeSeries& x, const PsiSpec& psi,
                                          const std::vector<double>& probes) {
  validate(x);
  SensitivityCurve c;
  c.index = (x.size() + 1) / 2 - 1;
  c.probes = probes;
  const auto est = [&](const TimeSeries& y) {
    const auto pyr = decompose(y, 1);
    return std::make_pair(estimate_wv_standard(pyr).nu2[0], estimate_wv(pyr, psi).nu2[0]);
  };
  std::tie(c.baseline_standard, c.baseline_robust) = est(x);
  for (double p : probes) {
    if (!std::isfinite(p)) throw DataError("probe values must be finite", "non_finite");
    TimeSeries y = x;
    y.values[c.index] = p;
    const auto [s, r] = est(y);
    c.standard.push_back(s);
    c.robust.push_back(r);
  }
  return c;
}

}  // namespace wavemoments

#endif  // WAVEMOMENTS_LAB_HPP
