// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "wavemoments/lab.hpp"

namespace wm = wavemoments;

namespace {

wm::TimeSeries white_noise(std::size_t T, std::uint64_t seed) {
  return wm::simulate(wm::parse_model_with_values("WN(sigma2=1)"), T, {seed, 0});
}

std::vector<std::size_t> changed(const wm::TimeSeries& a, const wm::TimeSeries& b) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a.values[t] != b.values[t]) out.push_back(t);
  }
  return out;
}

// Groups sorted indices into maximal contiguous runs.
std::vector<std::vector<std::size_t>> runs_of(const std::vector<std::size_t>& idx) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t t : idx) {
    if (out.empty() || out.back().back() + 1 != t) out.emplace_back();
    out.back().push_back(t);
  }
  return out;
}

}  // namespace

TEST(Contaminate, ZeroFractionIsIdentity) {
  const auto x = white_noise(500, 1);
  wm::ContaminationSpec c;
  c.kind = wm::ContaminationKind::isolated;
  c.sigma2 = 9;
  EXPECT_EQ(wm::contaminate(x, c, {1, 0}).values, x.values);
}

TEST(Contaminate, ExactCountForEveryKind) {
  const auto x = white_noise(1000, 2);
  for (double eps : {0.01, 0.05, 0.013}) {
    const std::size_t expect = static_cast<std::size_t>(std::ceil(eps * 1000 - 1e-9));
    for (auto kind : {wm::ContaminationKind::isolated, wm::ContaminationKind::patchy,
                      wm::ContaminationKind::level_shift, wm::ContaminationKind::scale_based}) {
      wm::ContaminationSpec c;
      c.kind = kind;
      c.epsilon = eps;
      c.sigma2 = 100;
      c.shifts = {5, -3};
      c.level = 3;
      for (std::uint64_t s = 0; s < 5; ++s) {
        EXPECT_EQ(changed(x, wm::contaminate(x, c, {s, 9})).size(), expect)
            << wm::to_string(kind) << " eps " << eps;
      }
    }
  }
}

TEST(Contaminate, LevelShiftSegments) {
  const auto x = white_noise(1000, 3);
  wm::ContaminationSpec c;
  c.kind = wm::ContaminationKind::level_shift;
  c.epsilon = 0.05;
  c.shifts = {5, -3};
  const auto y = wm::contaminate(x, c, {4, 0});
  const auto runs = runs_of(changed(x, y));
  ASSERT_EQ(runs.size(), 2u);
  const double shifts[] = {5, -3};
  for (int s = 0; s < 2; ++s) {
    EXPECT_EQ(runs[s].size(), 25u);
    for (std::size_t t : runs[s]) EXPECT_NEAR(y.values[t] - x.values[t], shifts[s], 1e-12);
  }
}

TEST(Contaminate, PatchyRunsAreContiguous) {
  const auto x = white_noise(1000, 5);
  wm::ContaminationSpec c;
  c.kind = wm::ContaminationKind::patchy;
  c.epsilon = 0.02;
  c.sigma2 = 100;
  c.patch_length = 5;
  const auto runs = runs_of(changed(x, wm::contaminate(x, c, {5, 0})));
  ASSERT_EQ(runs.size(), 4u);
  for (const auto& r : runs) EXPECT_EQ(r.size(), 5u);
}

TEST(Contaminate, ScaleBasedInflatesItsLevel) {
  // The contaminated-to-clean WV ratio, averaged over replicates, peaks at
  // the target level.
  for (int level : {2, 3, 4}) {
    std::vector<double> ratio(7, 0.0);
    for (std::uint64_t r = 0; r < 30; ++r) {
      const auto x = white_noise(4096, 100 + r);
      wm::ContaminationSpec c;
      c.kind = wm::ContaminationKind::scale_based;
      c.epsilon = 0.05;
      c.sigma2 = 25;
      c.level = level;
      const auto clean = wm::estimate_wv_standard(wm::decompose(x, 7));
      const auto dirty = wm::estimate_wv_standard(wm::decompose(wm::contaminate(x, c, {r, 1}), 7));
      for (int j = 0; j < 7; ++j) ratio[j] += dirty.nu2[j] / clean.nu2[j];
    }
    const auto peak = std::max_element(ratio.begin(), ratio.end()) - ratio.begin();
    EXPECT_EQ(peak + 1, level);
  }
}

TEST(Contaminate, DeterministicAndValidated) {
  const auto x = white_noise(300, 6);
  wm::ContaminationSpec c;
  c.kind = wm::ContaminationKind::isolated;
  c.epsilon = 0.1;
  c.sigma2 = 9;
  EXPECT_EQ(wm::contaminate(x, c, {1, 2}).values, wm::contaminate(x, c, {1, 2}).values);
  EXPECT_NE(wm::contaminate(x, c, {1, 2}).values, wm::contaminate(x, c, {1, 3}).values);
  c.epsilon = 0.5;
  EXPECT_THROW(wm::contaminate(x, c, {1, 2}), wm::ConfigError);
  c.epsilon = 0.1;
  c.sigma2 = 0;
  EXPECT_THROW(wm::contaminate(x, c, {1, 2}), wm::ConfigError);
}

TEST(RmseStar, HandComputedExample) {
  const auto r = wm::rmse_star({{1.1}, {0.9}, {1.0}}, {1.0});
  EXPECT_NEAR(r[0], 0.14826, 1e-12);
  EXPECT_EQ(wm::rmse_star({{2.0, -1.0}, {2.0, -1.0}}, {2.0, -1.0}), (std::vector<double>{0.0, 0.0}));
}

TEST(RmseStar, MedianBiasAndScale) {
  // Ratios 1.2, 1.4, 1.6: median rel err 0.4, mad 0.2 * 1.4826.
  const auto r = wm::rmse_star({{0.6}, {0.7}, {0.8}}, {0.5});
  EXPECT_NEAR(r[0], std::hypot(0.4, 0.2 * 1.4826), 1e-12);
}

TEST(RmseStar, ResistsOneWildEstimate) {
  std::vector<std::vector<double>> est;
  for (int i = 0; i < 100; ++i) est.push_back({1.0 + 0.01 * std::sin(i * 1.7)});
  const double base = wm::rmse_star(est, {1.0})[0];
  est.push_back({1e6});
  EXPECT_LT(std::abs(wm::rmse_star(est, {1.0})[0] - base), 0.05 * base);
}

TEST(RmseStar, ZeroTrueValueNamesCoordinate) {
  try {
    wm::rmse_star({{1.0, 0.1}, {1.0, 0.2}}, {1.0, 0.0}, {"a", "drift"});
    FAIL();
  } catch (const wm::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("drift"), std::string::npos);
  }
}

TEST(Scenario, ReproducibleAcrossThreadCounts) {
  wm::ScenarioConfig cfg;
  cfg.model = wm::parse_model_with_values("AR1(rho=0.9, nu2=1)");
  cfg.contamination.kind = wm::ContaminationKind::isolated;
  cfg.contamination.epsilon = 0.05;
  cfg.contamination.sigma2 = 9;
  cfg.replicates = 6;
  cfg.length = 600;
  cfg.threads = 1;
  const auto a = wm::run_scenario(cfg);
  cfg.threads = 3;
  const auto b = wm::run_scenario(cfg);
  ASSERT_EQ(a.records.size(), 6u * 2 * 2);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].theta, b.records[i].theta);
  }
  ASSERT_NE(a.find("contaminated", "RGMWM"), nullptr);
  EXPECT_EQ(a.find("clean", "GMWM")->succeeded + a.find("clean", "GMWM")->failed, 6u);
  EXPECT_EQ(a.find("contaminated", "RGMWM")->rmse_star, b.find("contaminated", "RGMWM")->rmse_star);
}

TEST(Scenario, ZeroReplicatesRejected) {
  wm::ScenarioConfig cfg;
  cfg.model = wm::parse_model_with_values("WN(sigma2=1)");
  cfg.replicates = 0;
  EXPECT_THROW(wm::run_scenario(cfg), wm::ConfigError);
}

TEST(Scenario, RobustWinsUnderIsolatedOutliers) {
  wm::ScenarioConfig cfg;
  cfg.model = wm::parse_model_with_values("AR1(rho=0.9, nu2=1)");
  cfg.contamination.kind = wm::ContaminationKind::isolated;
  cfg.contamination.epsilon = 0.05;
  cfg.contamination.sigma2 = 100;
  cfg.replicates = 40;
  cfg.include_clean = false;
  const auto rep = wm::run_scenario(cfg);
  const auto* g = rep.find("contaminated", "GMWM");
  const auto* r = rep.find("contaminated", "RGMWM");
  for (std::size_t i = 0; i < 2; ++i) EXPECT_LT(r->rmse_star[i], g->rmse_star[i]);
}

TEST(ScenarioFile, ParsesSectionsAndDefaults) {
  std::istringstream in(R"(
[defaults]
length = 800
seed = 3

[a]
model = AR1(rho=0.5, nu2=2)
contamination = level-shift
epsilon = 0.05
shifts = 5, -3

[b]
model = WN(sigma2=1)
length = 400
psi = huber
efficiency = 0.9
)");
  const auto s = wm::parse_scenarios(in);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].id, "a");
  EXPECT_EQ(s[0].length, 800u);
  EXPECT_EQ(s[0].seed, 3u);
  EXPECT_EQ(s[0].contamination.shifts, (std::vector<double>{5, -3}));
  EXPECT_EQ(s[1].length, 400u);
  EXPECT_EQ(s[1].estimators[1].psi.kind, wm::PsiKind::huber);
}

TEST(ScenarioFile, Errors) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return wm::parse_scenarios(in);
  };
  EXPECT_THROW(parse("[a]\nmodel = AR1\n"), wm::ConfigError);
  EXPECT_THROW(parse("[a]\nmodel = WN(sigma2=1)\ncolour = red\n"), wm::ConfigError);
  EXPECT_THROW(parse("[a]\nmodel = WN(sigma2=1)\nlength = many\n"), wm::ConfigError);
  EXPECT_THROW(parse(""), wm::ConfigError);
}

TEST(ScenarioFile, ShippedGridLoads) {
  std::ifstream in(WAVEMOMENTS_SOURCE_DIR "/configs/scenarios.ini");
  ASSERT_TRUE(in.good());
  const auto s = wm::parse_scenarios(in);
  ASSERT_EQ(s.size(), 5u);
  std::set<std::string> ids;
  for (const auto& c : s) {
    ids.insert(c.id);
    EXPECT_EQ(c.length, 1000u);
    EXPECT_EQ(c.replicates, 500u);
    EXPECT_NEAR(*c.estimators[1].psi.target_efficiency, 0.6, 1e-12);
  }
  EXPECT_EQ(ids, (std::set<std::string>{"ar1", "ar2", "arma12", "arma31", "ssm"}));
}

TEST(OutlierFlags, SpikeIsFlagged) {
  auto x = white_noise(2000, 7);
  x.values[1000] = 50.0;
  const auto est = wm::estimate_wv(wm::decompose(x, 4), wm::default_psi());
  const auto flags = wm::outlier_flags(est);
  bool found = false;
  for (const auto& f : flags) {
    if (f.time == 1000) {
      found = true;
      EXPECT_LT(f.min_weight, 1e-12);
      EXPECT_EQ(f.levels.front(), 1);
    }
  }
  EXPECT_TRUE(found);
  for (std::size_t i = 1; i < flags.size(); ++i) EXPECT_LT(flags[i - 1].time, flags[i].time);
}

TEST(OutlierFlags, NullFlagRate) {
  std::size_t flagged = 0, total = 0;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto x = white_noise(2000, 200 + r);
    flagged += wm::outlier_flags(wm::estimate_wv(wm::decompose(x, 3), wm::default_psi())).size();
    total += x.size();
  }
  EXPECT_LT(static_cast<double>(flagged) / total, 0.02);
}

TEST(OutlierFlags, ThresholdZeroAndStandardInput) {
  auto x = white_noise(500, 8);
  x.values[100] = 100.0;
  const auto pyr = wm::decompose(x, 3);
  EXPECT_TRUE(wm::outlier_flags(wm::estimate_wv(pyr, wm::default_psi()), 0.0).empty());
  EXPECT_THROW(wm::outlier_flags(wm::estimate_wv_standard(pyr)), wm::ConfigError);
}

TEST(Sensitivity, BoundedRobustCurve) {
  const auto x = white_noise(1000, 9);
  const std::vector<double> probes{1e2, 1e3, 1e4, 1e5, 1e6};
  const auto c = wm::sensitivity_curve(x, wm::default_psi(), probes);
  EXPECT_EQ(c.index, 499u);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    EXPECT_LT(std::abs(c.robust[i] - c.baseline_robust), 0.05 * c.baseline_robust);
    if (i) EXPECT_GT(c.standard[i], c.standard[i - 1]);
  }
  EXPECT_GT(c.standard.back() - c.baseline_standard, 10 * c.baseline_standard);
  const auto same = wm::sensitivity_curve(x, wm::default_psi(), {x.values[499]});
  EXPECT_EQ(same.robust[0], same.baseline_robust);
  EXPECT_EQ(same.standard[0], same.baseline_standard);
}

TEST(ScenarioFile, EstimatorList) {
  std::istringstream ok("[a]\nmodel = WN(sigma2=1)\nestimators = RGMWM\n");
  const auto s = wm::parse_scenarios(ok);
  ASSERT_EQ(s[0].estimators.size(), 1u);
  EXPECT_EQ(s[0].estimators[0].name, "RGMWM");
  std::istringstream bad("[a]\nmodel = WN(sigma2=1)\nestimators = GMWM, MLE\n");
  EXPECT_THROW(wm::parse_scenarios(bad), wm::ConfigError);
}

TEST(Scenario, SingleReplicateHasDegenerateScore) {
  wm::ScenarioConfig cfg;
  cfg.model = wm::parse_model_with_values("AR1(rho=0.9, nu2=1)");
  cfg.replicates = 1;
  const auto rep = wm::run_scenario(cfg);
  const auto* s = rep.find("clean", "GMWM");
  ASSERT_EQ(s->rmse_star.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& theta = rep.records[0].theta;
    EXPECT_NEAR(s->rmse_star[i], std::abs(theta[i] / rep.theta0[i] - 1.0), 1e-12);
  }
}
