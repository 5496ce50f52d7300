// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WAVEMOMENTS_TOOLS_COMMANDS_HPP
#define WAVEMOMENTS_TOOLS_COMMANDS_HPP

// Command implementations for the wavemoments executable.  Each command
// takes a resolved RunConfig and writes its files into config.out.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wavemoments/wavemoments.hpp"

namespace wavemoments::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct RunConfig {
  std::string command;
  std::string input;
  std::string out = ".";
  std::vector<std::string> models;
  std::string psi = "tukey";
  std::optional<double> efficiency;
  std::optional<double> c;
  std::string omega = "diag";
  std::string cov = "batched";
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string wavelet = "haar";
  int levels = 0;
  std::size_t bootstrap = 100;
  int starts = 5;
  double threshold = 0.1;
  int j_max = 2;
  std::optional<std::size_t> replicates;  // simulate: overrides the scenario file
  std::string scenario_text;              // simulate: embedded scenario file
  unsigned threads = 0;                   // not part of the recorded config
};

inline json to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["input"] = c.input;
  j["out"] = c.out;
  j["models"] = c.models;
  j["psi"] = c.psi;
  j["efficiency"] = c.efficiency ? json(*c.efficiency) : json(nullptr);
  j["c"] = c.c ? json(*c.c) : json(nullptr);
  j["omega"] = c.omega;
  j["cov"] = c.cov;
  j["alpha"] = c.alpha;
  j["seed"] = c.seed;
  j["wavelet"] = c.wavelet;
  j["levels"] = c.levels;
  j["bootstrap_replicates"] = c.bootstrap;
  j["starts"] = c.starts;
  j["threshold"] = c.threshold;
  j["j_max"] = c.j_max;
  j["replicates"] = c.replicates ? json(*c.replicates) : json(nullptr);
  if (c.command == "simulate") j["scenario_file"] = c.scenario_text;
  return j;
}

inline RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    c.command = j.at("command").get<std::string>();
    c.input = j.at("input").get<std::string>();
    c.out = j.at("out").get<std::string>();
    c.models = j.at("models").get<std::vector<std::string>>();
    c.psi = j.at("psi").get<std::string>();
    if (!j.at("efficiency").is_null()) c.efficiency = j.at("efficiency").get<double>();
    if (!j.at("c").is_null()) c.c = j.at("c").get<double>();
    c.omega = j.at("omega").get<std::string>();
    c.cov = j.at("cov").get<std::string>();
    c.alpha = j.at("alpha").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.wavelet = j.at("wavelet").get<std::string>();
    c.levels = j.at("levels").get<int>();
    c.bootstrap = j.at("bootstrap_replicates").get<std::size_t>();
    c.starts = j.at("starts").get<int>();
    c.threshold = j.at("threshold").get<double>();
    c.j_max = j.at("j_max").get<int>();
    if (!j.at("replicates").is_null()) c.replicates = j.at("replicates").get<std::size_t>();
    if (j.contains("scenario_file")) c.scenario_text = j.at("scenario_file").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("replay config is incomplete: ") + e.what(), "bad_replay");
  }
  return c;
}

/// Reads the "config" object embedded in a previous output file.
inline RunConfig load_replay(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open replay file '" + path + "'", "io_error");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("replay file '" + path + "' is not JSON: " + e.what(), "parse_error");
  }
  if (!j.contains("config")) throw ConfigError("replay file has no embedded config", "bad_replay");
  return config_from_json(j.at("config"));
}

// ---------------------------------------------------------------------------
// Input and output

/// One numeric column, optional header line, no missing values.
inline TimeSeries read_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file '" + path + "'", "io_error");
  TimeSeries x;
  std::string line;
  std::size_t lineno = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t");
    const std::string field = line.substr(first, last - first + 1);
    if (field.find(',') != std::string::npos || field.find(';') != std::string::npos) {
      throw DataError("line " + std::to_string(lineno) + ": expected a single column, got '" +
                          field + "'",
                      "parse_error");
    }
    static const char* missing[] = {"NA", "na", "NaN", "nan", "NAN", "null", "NULL", "?", "."};
    for (const char* m : missing) {
      if (field == m) {
        throw DataError("line " + std::to_string(lineno) + ": missing value '" + field +
                            "' (no imputation is done)",
                        "missing_value");
      }
    }
    double v = 0.0;
    const char* b = field.data();
    const char* e = b + field.size();
    if (*b == '+') ++b;
    const auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e) {
      if (header_allowed && x.values.empty()) {
        header_allowed = false;
        continue;
      }
      throw DataError("line " + std::to_string(lineno) + ": not a number: '" + field + "'",
                      "parse_error");
    }
    if (!std::isfinite(v)) {
      throw DataError("line " + std::to_string(lineno) + ": non-finite value", "non_finite");
    }
    header_allowed = false;
    x.values.push_back(v);
  }
  if (x.values.size() < 2) {
    throw DataError("input '" + path + "' holds fewer than 2 values", "too_short");
  }
  return x;
}

/// Shortest representation that reads back to the same double.
inline std::string fmt(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(number(m(i, k)));
    rows.push_back(row);
  }
  return rows;
}

inline json vector_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

/// Writes next to the target and renames into place.
inline void write_atomic(const fs::path& target, const std::string& content) {
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'", "io_error");
    out << content;
    out.flush();
    if (!out) throw DataError("write failed for '" + tmp.string() + "'", "io_error");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw DataError("cannot move output into '" + target.string() + "': " + ec.message(), "io_error");
}

inline void write_json(const fs::path& target, const json& j) { write_atomic(target, j.dump(2) + "\n"); }

inline fs::path prepare_out(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw DataError("cannot create output directory '" + c.out + "': " + ec.message(), "io_error");
  return fs::path(c.out);
}

// ---------------------------------------------------------------------------
// Resolution of settings

inline PsiSpec resolve_psi(const RunConfig& c) {
  if (c.efficiency && c.c) {
    throw ConfigError("set either --efficiency or --c, not both", "inconsistent_config");
  }
  const auto kind = parse_psi_kind(c.psi);
  if (kind == PsiKind::identity) {
    if (c.c || (c.efficiency && *c.efficiency != 1.0)) {
      throw ConfigError("the identity psi takes no tuning constant", "inconsistent_config");
    }
    return identity_psi();
  }
  if (c.c) return psi_with_c(kind, *c.c);
  return psi_with_efficiency(kind, c.efficiency.value_or(0.6));
}

inline PipelineOptions resolve_pipeline(const RunConfig& c) {
  PipelineOptions o;
  o.psi = resolve_psi(c);
  o.family = parse_wavelet_family(c.wavelet);
  o.levels = c.levels;
  o.covariance.method = parse_covariance_method(c.cov);
  o.covariance.replicates = c.bootstrap;
  o.covariance.stream = Stream{c.seed, 0};
  o.covariance.threads = c.threads;
  o.fit.omega = parse_omega_kind(c.omega);
  o.fit.alpha = c.alpha;
  o.fit.seed = c.seed;
  o.fit.starts = c.starts;
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)", "bad_alpha");
  return o;
}

inline json psi_json(const PsiSpec& p) {
  json j;
  j["kind"] = to_string(p.kind);
  j["c"] = number(p.c);
  j["efficiency"] = p.target_efficiency ? json(*p.target_efficiency) : json(nullptr);
  return j;
}

inline json wv_json(const WvEstimate& e) {
  json j;
  j["estimator"] = e.tag();
  j["psi"] = psi_json(e.psi);
  j["levels"] = e.levels();
  j["scales"] = vector_json(e.scales);
  j["nu2"] = vector_json(e.nu2);
  j["alpha"] = e.alpha;
  j["ci_lower"] = vector_json(e.ci_lower);
  j["ci_upper"] = vector_json(e.ci_upper);
  j["covariance"] = matrix_json(e.covariance);
  if (e.robust()) {
    json down = json::array();
    for (const auto& w : e.weights) {
      std::size_t n = 0;
      for (double v : w) n += v < 1.0;
      down.push_back(n);
    }
    j["downweighted_coefficients"] = down;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Commands

/// Standard and robust WV with covariance and intervals.
inline void cmd_wv(const RunConfig& c) {
  const auto x = read_series(c.input);
  auto opt = resolve_pipeline(c);
  std::optional<ModelSpec> model;
  if (opt.covariance.method == CovarianceMethod::parametric) {
    if (c.models.size() != 1) {
      throw ConfigError("parametric covariance for wv needs one --model with values", "missing_model");
    }
    const auto parsed = parse_model(c.models[0]);
    if (!parsed.has_values) {
      throw ConfigError("parametric covariance for wv needs parameter values in --model", "missing_model");
    }
    model = parsed.model;
  }
  const int J = opt.levels > 0 ? opt.levels
                               : default_levels(x.size(), opt.family, opt.psi, opt.covariance.robust);
  const auto pyr = decompose(x, J, opt.family);
  auto run = [&](const PsiSpec& psi) {
    auto est = estimate_wv(pyr, psi, opt.covariance.robust);
    est.covariance = estimate_wv_covariance(x, pyr, est, opt.covariance, model);
    wv_confidence_intervals(est, c.alpha);
    return est;
  };
  const auto standard = run(identity_psi());
  const auto robust = run(opt.psi);

  const auto dir = prepare_out(c);
  json j;
  j["config"] = to_json(c);
  j["series"] = {{"length", x.size()}};
  j["wavelet"] = to_string(opt.family);
  j["levels"] = J;
  j["covariance_method"] = to_string(opt.covariance.method);
  j["standard"] = wv_json(standard);
  j["robust"] = wv_json(robust);
  write_json(dir / "wv.json", j);

  std::string csv = "tau,nu2_standard,lo_standard,hi_standard,nu2_robust,lo_robust,hi_robust\n";
  for (int k = 0; k < J; ++k) {
    const auto i = static_cast<std::size_t>(k);
    csv += fmt(standard.scales[i]) + "," + fmt(standard.nu2[i]) + "," + fmt(standard.ci_lower[i]) +
           "," + fmt(standard.ci_upper[i]) + "," + fmt(robust.nu2[i]) + "," +
           fmt(robust.ci_lower[i]) + "," + fmt(robust.ci_upper[i]) + "\n";
  }
  write_atomic(dir / "wv_plot.csv", csv);
}

inline json fit_json(const FitResult& f) {
  json j;
  j["model"] = format_model(f.model);
  json params = json::array();
  for (std::size_t i = 0; i < f.theta.size(); ++i) {
    json p;
    p["name"] = f.names[i];
    p["estimate"] = number(f.theta[i]);
    p["std_error"] = i < f.std_error.size() ? number(f.std_error[i]) : json(nullptr);
    p["ci_lower"] = i < f.ci_lower.size() ? number(f.ci_lower[i]) : json(nullptr);
    p["ci_upper"] = i < f.ci_upper.size() ? number(f.ci_upper[i]) : json(nullptr);
    params.push_back(p);
  }
  j["parameters"] = params;
  j["ci_level"] = 1.0 - f.alpha;
  j["covariance"] = matrix_json(f.covariance);
  j["covariance_note"] = f.covariance_note;
  j["objective"] = number(f.objective);
  j["omega"] = to_string(f.omega_kind);
  if (f.jtest) {
    j["j_test"] = {{"statistic", number(f.jtest->statistic)},
                   {"df", f.jtest->df},
                   {"p_value", number(f.jtest->p_value)},
                   {"nominal", f.jtest->nominal},
                   {"note", f.jtest_note}};
  } else {
    j["j_test"] = {{"statistic", nullptr}, {"note", f.jtest_note}};
  }
  const auto& d = f.diagnostics;
  j["diagnostics"] = {{"starts", d.starts},
                      {"converged_starts", d.converged_starts},
                      {"starts_agree", d.starts_agree},
                      {"start_objectives", vector_json(d.start_objectives)},
                      {"iterations", d.iterations},
                      {"evaluations", d.evaluations},
                      {"simplex_size", number(d.simplex_size)}};
  j["nu2_model"] = vector_json(f.nu2_model);
  return j;
}

/// Fits one model, or ranks several against the same WV estimate.
inline void cmd_fit(const RunConfig& c) {
  if (c.models.empty()) throw ConfigError("fit needs at least one --model", "missing_model");
  const auto x = read_series(c.input);
  const auto opt = resolve_pipeline(c);
  std::vector<ModelSpec> shapes;
  for (const auto& m : c.models) shapes.push_back(parse_model(m).model);

  json j;
  j["config"] = to_json(c);
  j["series"] = {{"length", x.size()}};
  std::vector<FitResult> fits;
  WvEstimate wv;
  if (shapes.size() == 1) {
    auto r = fit_series(x, shapes[0], opt);
    wv = r.wv;
    j["wv"] = wv_json(wv);
    if (r.preliminary) j["preliminary"] = fit_json(*r.preliminary);
    j["fit"] = fit_json(r.fit);
    fits.push_back(std::move(r.fit));
  } else {
    const bool shared = opt.covariance.method != CovarianceMethod::parametric;
    auto rep = model_compare(x, shapes, opt, shared);
    wv = rep.wv;
    j["wv"] = wv_json(wv);
    json ranking = json::array();
    for (std::size_t k = 0; k < rep.entries.size(); ++k) {
      const auto& e = rep.entries[k];
      json r;
      r["rank"] = k + 1;
      r["model"] = e.model;
      r["ok"] = e.ok;
      if (e.ok) {
        r["fit"] = fit_json(e.fit);
        r["residuals"] = vector_json(e.residuals);
        fits.push_back(e.fit);
      } else {
        r["error"] = {{"code", e.error_code}, {"message", e.error}};
      }
      ranking.push_back(r);
    }
    j["comparison"] = {{"shared_omega", shared},
                       {"ranked_by", shared ? "objective" : "j_test_p_value"},
                       {"candidates", ranking}};
  }
  const auto dir = prepare_out(c);
  write_json(dir / "fit.json", j);

  std::string csv = "tau,nu2_hat,lo,hi";
  for (std::size_t k = 0; k < fits.size(); ++k) {
    csv += fits.size() == 1 ? ",nu2_model" : ",nu2_model_" + std::to_string(k + 1);
  }
  std::vector<std::vector<std::vector<double>>> parts;
  if (fits.size() == 1) {
    parts.push_back(theoretical_wv_components(fits[0].model, wv.levels(), wv.family));
    for (std::size_t p = 0; p < fits[0].model.components.size(); ++p) {
      csv += ",component_" + std::to_string(p + 1);
    }
  }
  csv += "\n";
  for (int k = 0; k < wv.levels(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    csv += fmt(wv.scales[i]) + "," + fmt(wv.nu2[i]) + "," +
           (i < wv.ci_lower.size() ? fmt(wv.ci_lower[i]) : "") + "," +
           (i < wv.ci_upper.size() ? fmt(wv.ci_upper[i]) : "");
    for (const auto& f : fits) csv += "," + fmt(f.nu2_model[i]);
    for (const auto& comp : parts) {
      for (const auto& col : comp) csv += "," + fmt(col[i]);
    }
    csv += "\n";
  }
  write_atomic(dir / "fit_wv_overlay.csv", csv);
}

inline void cmd_outliers(const RunConfig& c) {
  const auto x = read_series(c.input);
  const auto opt = resolve_pipeline(c);
  if (opt.psi.is_identity()) {
    throw ConfigError("robust weights required: outlier flags need a bounded psi", "robust_weights_required");
  }
  const int J = opt.levels > 0 ? opt.levels
                               : default_levels(x.size(), opt.family, opt.psi, opt.covariance.robust);
  const auto est = estimate_wv(decompose(x, std::min(J, std::max(c.j_max, 1)), opt.family), opt.psi,
                               opt.covariance.robust);
  const auto flags = outlier_flags(est, c.threshold, c.j_max);
  json j;
  j["config"] = to_json(c);
  j["series"] = {{"length", x.size()}};
  j["psi"] = psi_json(opt.psi);
  j["threshold"] = c.threshold;
  j["j_max"] = std::min(c.j_max, est.levels());
  j["index_base"] = 0;
  j["count"] = flags.size();
  json list = json::array();
  for (const auto& f : flags) {
    list.push_back({{"index", f.time}, {"min_weight", number(f.min_weight)}, {"levels", f.levels}});
  }
  j["flags"] = list;
  write_json(prepare_out(c) / "outliers.json", j);
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file '" + path + "'", "io_error");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void cmd_simulate(RunConfig c) {
  if (c.scenario_text.empty()) c.scenario_text = read_text(c.input);
  std::istringstream in(c.scenario_text);
  auto scenarios = parse_scenarios(in);
  json report;
  report["config"] = to_json(c);
  json list = json::array();
  json runtime = json::array();
  std::string csv = "scenario,replicate,setting,estimator,status,parameter,estimate\n";
  for (auto& s : scenarios) {
    if (c.replicates) s.replicates = *c.replicates;
    s.threads = c.threads;
    const auto rep = run_scenario(s);
    json sj;
    sj["id"] = s.id;
    sj["model"] = format_model(s.model);
    sj["length"] = s.length;
    sj["replicates"] = s.replicates;
    sj["seed"] = s.seed;
    const auto& k = s.contamination;
    sj["contamination"] = {{"kind", to_string(k.kind)},   {"epsilon", k.epsilon},
                           {"count", contaminated_count(k.epsilon, s.length)},
                           {"sigma2", k.sigma2},          {"patch_length", k.patch_length},
                           {"shifts", k.shifts},          {"level", k.level}};
    json ests = json::array();
    for (const auto& e : s.estimators) ests.push_back({{"name", e.name}, {"psi", psi_json(e.psi)}});
    sj["estimators"] = ests;
    sj["omega"] = to_string(s.omega);
    sj["covariance_method"] = to_string(s.covariance);
    sj["parameters"] = rep.names;
    sj["theta0"] = vector_json(rep.theta0);
    json sums = json::array();
    for (const auto& m : rep.summaries) {
      json r;
      r["setting"] = m.setting;
      r["estimator"] = m.estimator;
      r["succeeded"] = m.succeeded;
      r["failed"] = m.failed;
      r["failure_rate"] = static_cast<double>(m.failed) / static_cast<double>(s.replicates);
      json rm = json::object(), med = json::object();
      for (std::size_t i = 0; i < m.rmse_star.size(); ++i) {
        rm[rep.names[i]] = number(m.rmse_star[i]);
        med[rep.names[i]] = number(m.median_estimate[i]);
      }
      r["rmse_star"] = rm;
      r["median_estimate"] = med;
      sums.push_back(r);
    }
    sj["summaries"] = sums;
    list.push_back(sj);
    runtime.push_back({{"id", s.id}, {"seconds", rep.runtime_seconds}});
    for (const auto& r : rep.records) {
      const std::string head = s.id + "," + std::to_string(r.replicate) + "," + r.setting + "," +
                               r.estimator + ",";
      if (!r.ok) {
        csv += head + "failed:" + r.error_code + ",,\n";
        continue;
      }
      for (std::size_t i = 0; i < r.theta.size(); ++i) {
        csv += head + "ok," + rep.names[i] + "," + fmt(r.theta[i]) + "\n";
      }
    }
  }
  report["mad_scale"] = kMadScale;
  report["scenarios"] = list;
  const auto dir = prepare_out(c);
  write_json(dir / "report.json", report);
  write_atomic(dir / "replicates.csv", csv);
  // Timings vary run to run, so they live outside the reproducible report.
  write_json(dir / "runtime.json", json{{"scenarios", runtime}});
}

inline void run(const RunConfig& c) {
  if (c.command == "wv") return cmd_wv(c);
  if (c.command == "fit") return cmd_fit(c);
  if (c.command == "outliers") return cmd_outliers(c);
  if (c.command == "simulate") return cmd_simulate(c);
  throw ConfigError("unknown command '" + c.command + "'", "bad_command");
}

}  // namespace wavemoments::cli

#endif  // WAVEMOMENTS_TOOLS_COMMANDS_HPP
