// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"

namespace cli = wavemoments::cli;

namespace {

int report(const std::string& kind, const std::string& code, const std::string& message,
           int status) {
  nlohmann::ordered_json j;
  j["error"] = {{"kind", kind}, {"code", code}, {"message", message}, {"exit_code", status}};
  std::cerr << j.dump() << "\n";
  return status;
}

void add_common(CLI::App* sub, cli::RunConfig& c, std::string& replay) {
  sub->add_option("--input", c.input, "Input file (CSV column, or scenario INI for simulate)");
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "Master random seed")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads, 0 for all cores (not recorded)");
  sub->add_option("--replay", replay, "Re-run the config embedded in a previous output JSON");
}

void add_estimation(CLI::App* sub, cli::RunConfig& c) {
  sub->add_option("--model", c.models, "Model, e.g. \"AR1 + WN\" (repeat to compare)");
  sub->add_option("--psi", c.psi, "identity, huber or tukey")->capture_default_str();
  sub->add_option("--efficiency", c.efficiency, "Target asymptotic efficiency of the robust WV");
  sub->add_option("--c", c.c, "Explicit tuning constant");
  sub->add_option("--omega", c.omega, "diag, full or identity")->capture_default_str();
  sub->add_option("--cov", c.cov, "batched, block-bootstrap or parametric")->capture_default_str();
  sub->add_option("--alpha", c.alpha, "Confidence intervals at level 1 - alpha")->capture_default_str();
  sub->add_option("--wavelet", c.wavelet, "haar or d4")->capture_default_str();
  sub->add_option("--levels", c.levels, "Number of scales, 0 for all admissible")->capture_default_str();
  sub->add_option("--bootstrap", c.bootstrap, "Bootstrap replicates for the WV covariance")
      ->capture_default_str();
  sub->add_option("--starts", c.starts, "Optimizer starts")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust wavelet-variance estimation and GMWM model fitting"};
  app.require_subcommand(1);
  cli::RunConfig config;
  std::string replay;

  auto* wv = app.add_subcommand("wv", "Standard and robust wavelet variance");
  auto* fit = app.add_subcommand("fit", "Fit one model, or compare several");
  auto* out = app.add_subcommand("outliers", "Flag observations from robust weights");
  auto* sim = app.add_subcommand("simulate", "Run contamination scenarios from an INI file");
  for (auto* s : {wv, fit, out, sim}) add_common(s, config, replay);
  for (auto* s : {wv, fit, out}) add_estimation(s, config);
  out->add_option("--threshold", config.threshold, "Squared-weight threshold")->capture_default_str();
  out->add_option("--j-max", config.j_max, "Highest level inspected")->capture_default_str();
  sim->add_option("--replicates", config.replicates, "Override the replicate count of every scenario");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("config", "bad_arguments", e.what(), 2);
  }

  try {
    auto* chosen = app.get_subcommands().front();
    config.command = chosen->get_name();
    if (!replay.empty()) {
      const unsigned threads = config.threads;
      const bool out_given = chosen->count("--out") > 0;
      const std::string out_dir = config.out;
      config = cli::load_replay(replay);
      if (config.command != chosen->get_name()) {
        throw wavemoments::ConfigError("replay file was written by '" + config.command + "'",
                                       "bad_replay");
      }
      config.threads = threads;
      if (out_given) config.out = out_dir;
    } else if (config.input.empty()) {
      throw wavemoments::ConfigError("--input is required", "missing_input");
    }
    cli::run(config);
  } catch (const wavemoments::Error& e) {
    return report(wavemoments::to_string(e.kind()), e.code(), e.what(),
                  wavemoments::exit_code(e.kind()));
  } catch (const std::exception& e) {
    return report("internal", "internal", e.what(), 1);
  }
  return 0;
}
