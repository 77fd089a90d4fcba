#include <doctest.h>

#include <cmath>
#include <vector>

#include <json.hpp>

#include "rwrs/errors.hpp"
#include "rwrs/harness.hpp"

using namespace rwrs;
using ordered_json = nlohmann::ordered_json;

namespace {

QuenchedExperimentSpec small_renewal_spec() {
  QuenchedExperimentSpec spec;
  spec.theorem = Theorem::kRenewal;
  spec.scenery_law = SceneryLaw::kRademacher;
  spec.scenery_seeds = {11, 22, 33};
  spec.walk = RenewalFinite{{1, 2}, {0.5, 0.5}};
  spec.horizon = 600;
  spec.samples = 3000;
  spec.moment_order = 4;
  spec.master_seed = 777;
  spec.threads = 2;
  spec.tol.variance_rel = 0.25;        // generous at this scale
  spec.tol.fourth_moment_rel = 0.45;
  spec.tol.ks_min_pass_seeds = 2;
  return spec;
}

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("small renewal experiment passes with desk tolerances") {
  ExperimentReport report = run_quenched_renewal(small_renewal_spec());
  CHECK(report.kind == "quenched_renewal");
  CHECK_FALSE(report.underpowered);
  CHECK(report.all_passed());
  REQUIRE(report.seeds.size() == 3);
  for (const SeedStats& s : report.seeds) {
    CHECK(std::abs(s.variance - 1.0 / 3.0) < 0.25 / 3.0);
    CHECK_FALSE(s.degenerate);
  }
  // artifacts present and parseable
  ordered_json body = ordered_json::parse(report.body_json);
  CHECK(body["variance_target"]["value"].get<double>() == doctest::Approx(1.0 / 3.0));
  CHECK(body["criteria"].size() == report.criteria.size());
  CHECK(report.summary_csv.find("seed,n,M,") == 0);
  CHECK(report.ecdf_csv.find("sample_value,empirical_cdf,target_normal_cdf") == 0);
  ordered_json full = ordered_json::parse(report.full_json());
  CHECK(full["v"] == 1);
  CHECK(full.contains("timing"));
}

TEST_CASE("report bodies are identical across thread counts") {
  QuenchedExperimentSpec spec = small_renewal_spec();
  spec.samples = 800;
  spec.threads = 1;
  ExperimentReport r1 = run_quenched_renewal(spec);
  spec.threads = 8;
  ExperimentReport r8 = run_quenched_renewal(spec);
  CHECK(r1.body_json == r8.body_json);
}

TEST_CASE("deterministic walks are flagged degenerate and pass trivially") {
  QuenchedExperimentSpec spec = small_renewal_spec();
  spec.walk = RenewalFinite{{1}, {1.0}};
  spec.samples = 100;  // few needed
  spec.tol.min_power_samples = 10;
  ExperimentReport report = run_quenched_renewal(spec);
  CHECK(report.all_passed());
  bool found_flag = false;
  for (const CriterionResult& c : report.criteria) {
    if (c.name == "degenerate_flagged") found_flag = true;
  }
  CHECK(found_flag);
  for (const SeedStats& s : report.seeds) CHECK(s.degenerate);
}

TEST_CASE("underpowered runs are flagged, not failed") {
  QuenchedExperimentSpec spec = small_renewal_spec();
  spec.samples = 10;
  ExperimentReport report = run_quenched_renewal(spec);
  CHECK(report.underpowered);
  for (const CriterionResult& c : report.criteria) CHECK(c.low_power);
}

TEST_CASE("inadmissible laws are rejected up front") {
  QuenchedExperimentSpec spec = small_renewal_spec();
  spec.walk = RenewalFinite{{2, 4}, {0.5, 0.5}};
  CHECK_THROWS_AS(run_quenched_renewal(spec), UsageError);

  QuenchedExperimentSpec planar = small_renewal_spec();
  planar.theorem = Theorem::kPlanar;
  planar.walk = SimpleWalk{3};
  CHECK_THROWS_AS(run_quenched_planar(planar), UsageError);
}

TEST_CASE("planar run reports ratios, schedule, and the I_n ingredient") {
  QuenchedExperimentSpec spec;
  spec.theorem = Theorem::kPlanar;
  spec.scenery_law = SceneryLaw::kRademacher;
  spec.scenery_seeds = {5, 6};
  spec.walk = SimpleWalk{2};
  spec.horizon = 4000;
  spec.samples = 400;
  spec.moment_order = 4;
  spec.nu = 1.0;
  spec.schedule_max_m = 3;
  spec.master_seed = 101;
  spec.threads = 2;
  spec.tol.planar_band_lo = 0.4;  // slow logarithmic convergence at n = 4e3
  spec.tol.planar_band_hi = 1.8;
  spec.tol.min_power_samples = 100;
  ExperimentReport report = run_quenched_planar(spec);
  CHECK(report.all_passed());

  ordered_json body = ordered_json::parse(report.body_json);
  REQUIRE(body["tm_schedule"].size() == 3);
  CHECK(body["tm_schedule"][0]["t_m"] == 2);
  CHECK(body["tm_schedule"][1]["t_m"] == 54);
  CHECK(body["tm_schedule"][2]["t_m"] == 8103);
  // I_n/(n log n) should be in the same ballpark as sigma^2 = 1/pi
  double i_ratio = body["i_over_nlogn_estimate"].get<double>();
  CHECK(i_ratio > 0.15);
  CHECK(i_ratio < 0.8);
  // the quenched second moment tracks the I_n ingredient (same ballpark)
  double mean_m2 = body["across_seeds"]["moments"][1]["mean"].get<double>();
  CHECK(std::abs(mean_m2 - i_ratio) < 0.35 * std::max(mean_m2, i_ratio) + 0.05);
}

TEST_CASE("transient run with a gamma override checks variance linearity") {
  QuenchedExperimentSpec spec;
  spec.theorem = Theorem::kTransient;
  spec.scenery_law = SceneryLaw::kStandardGaussian;
  spec.scenery_seeds = {1, 2};
  spec.walk = SimpleWalk{3};
  spec.horizon = 4000;
  spec.samples = 3000;
  spec.moment_order = 4;
  spec.time_grid = {0.5, 1.0};
  spec.gamma_override = 0.6595;  // known value for Z^3
  spec.master_seed = 202;
  spec.threads = 2;
  spec.tol.variance_rel = 0.2;
  spec.tol.half_time_rel = 0.25;
  spec.tol.ks_min_pass_seeds = 1;
  ExperimentReport report = run_quenched_transient(spec);
  CHECK(report.all_passed());

  ordered_json body = ordered_json::parse(report.body_json);
  CHECK(body["variance_target"]["value"].get<double>() == doctest::Approx(2.0326005).epsilon(1e-4));
  CHECK_FALSE(body.contains("gamma"));  // override skips estimation
  for (const auto& seed : body["seeds"]) {
    CHECK(std::abs(seed["increment_correlation"].get<double>()) < 0.1);
    double ratio = seed["half_to_terminal_variance_ratio"].get<double>();
    CHECK(ratio > 0.3);
    CHECK(ratio < 0.7);
  }
}

TEST_CASE("transient runs estimate gamma when not overridden") {
  QuenchedExperimentSpec spec;
  spec.theorem = Theorem::kTransient;
  spec.scenery_seeds = {1};
  spec.walk = SimpleWalk{3};
  spec.horizon = 1000;
  spec.samples = 500;
  spec.time_grid = {0.5, 1.0};
  spec.gamma_horizon = 5000;
  spec.gamma_samples = 5000;
  spec.master_seed = 303;
  spec.threads = 2;
  spec.tol.variance_rel = 0.4;
  spec.tol.half_time_rel = 0.5;
  spec.tol.ks_min_pass_seeds = 1;
  spec.tol.min_power_samples = 100;
  ExperimentReport report = run_quenched_transient(spec);
  ordered_json body = ordered_json::parse(report.body_json);
  CHECK(body.contains("gamma"));
  double gh = body["gamma"]["at_doubled"]["gamma_hat"].get<double>();
  CHECK(gh > 0.60);
  CHECK(gh < 0.72);
}

TEST_CASE("renewal intersection suite converges to the renewal limits") {
  IntersectionSuiteSpec spec;
  spec.law = RenewalFinite{{1, 2}, {0.5, 0.5}};
  spec.horizons = {200, 2000};
  spec.replicas = 300;
  spec.master_seed = 11;
  spec.threads = 2;
  spec.tol.mean_rel_tol = 0.05;
  spec.tol.slope_max = -0.6;
  ExperimentReport report = run_intersection_suite(spec);
  CHECK(report.kind == "intersection_suite_renewal");
  CHECK(report.all_passed());
  ordered_json body = ordered_json::parse(report.body_json);
  CHECK(body["q_limit"].get<double>() == doctest::Approx(2.0 / 3.0));
  CHECK(body["j_limit"].get<double>() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("planar intersection suite tracks I_n/(n log n)") {
  IntersectionSuiteSpec spec;
  spec.law = SimpleWalk{2};
  spec.horizons = {500, 5000};
  spec.replicas = 5;
  spec.master_seed = 21;
  spec.threads = 2;
  spec.tol.trend_band_lo = 0.3;
  spec.tol.trend_band_hi = 2.2;
  ExperimentReport report = run_intersection_suite(spec);
  CHECK(report.kind == "intersection_suite_planar");
  ordered_json body = ordered_json::parse(report.body_json);
  CHECK(body["sigma2"].get<double>() == doctest::Approx(1.0 / M_PI));
  CHECK(body["horizons"].size() == 2);
}

TEST_CASE("growth suite normalizers follow the regimes") {
  CHECK(growth_regime_name(SimpleWalk{3}) == "sqrt");
  CHECK(growth_regime_name(SimpleWalk{4}) == "log");
  CHECK(growth_regime_name(SimpleWalk{5}) == "bounded");
  CHECK(growth_regime_name(StableTail{1, 0.8}) == "power");
  CHECK(growth_regime_name(StableTail{3, 1.2}) == "bounded");
  CHECK(growth_regime_name(StableTail{2, 1.0}) == "log");
  CHECK(growth_normalizer(SimpleWalk{3}, 10000) == doctest::Approx(100.0));
  CHECK(growth_normalizer(StableTail{1, 0.8}, 10000) ==
        doctest::Approx(std::pow(10000.0, 0.75)));
  CHECK(growth_regime_bounded(SimpleWalk{5}));
}

TEST_CASE("growth suite runs the d=3 regime at small scale") {
  GrowthSuiteSpec spec;
  spec.law = SimpleWalk{3};
  spec.horizons = {500, 5000};
  spec.pairs = 200;
  spec.master_seed = 31;
  spec.threads = 2;
  spec.tol.growth_ratio_bound = 4.0;
  ExperimentReport report = run_growth_suite(spec);
  CHECK(report.kind == "growth_suite");
  ordered_json body = ordered_json::parse(report.body_json);
  CHECK(body["regime"] == "sqrt");
  CHECK(body["horizons"].size() == 2);
  for (const CriterionResult& c : report.criteria) {
    CAPTURE(c.name);
    CHECK(c.passed);
  }
}

TEST_CASE("growth suite stabilization for a strongly transient walk") {
  GrowthSuiteSpec spec;
  spec.law = SimpleWalk{5};
  spec.horizons = {2000, 20000};
  spec.pairs = 100;
  spec.master_seed = 41;
  spec.threads = 2;
  spec.tol.stabilization_min_fraction = 0.9;
  ExperimentReport report = run_growth_suite(spec);
  ordered_json body = ordered_json::parse(report.body_json);
  CHECK(body["regime"] == "bounded");
  CHECK(body["stabilized_fraction"].get<double>() >= 0.9);
}

TEST_CASE("suite dispatch rejects mismatched laws") {
  GrowthSuiteSpec growth;
  growth.law = RenewalFinite{{1, 2}, {0.5, 0.5}};
  growth.horizons = {100, 1000};
  CHECK_THROWS_AS(run_growth_suite(growth), UsageError);

  IntersectionSuiteSpec inter;
  inter.law = SimpleWalk{3};
  inter.horizons = {100, 1000};
  CHECK_THROWS_AS(run_intersection_suite(inter), UsageError);
}

// Lemma-level diagnostics: the across-seed variance of m(2) decays roughly
// like 1/n, and per-seed odd moments stay within a few standard errors of 0.
TEST_CASE("moment diagnostics shrink with the horizon") {
  auto across_seed_m2_variance = [&](std::int64_t n) {
    QuenchedExperimentSpec spec = small_renewal_spec();
    spec.scenery_seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    spec.horizon = n;
    spec.samples = 2500;
    spec.moment_order = 3;
    ExperimentReport report = run_quenched_renewal(spec);
    ordered_json body = ordered_json::parse(report.body_json);
    return body["across_seeds"]["moments"][1]["variance_across_seeds"].get<double>();
  };
  double var_small = across_seed_m2_variance(300);
  double var_large = across_seed_m2_variance(3000);
  CHECK(var_large < var_small);
}

TEST_CASE("per-seed odd moments are small at moderate horizons") {
  QuenchedExperimentSpec spec = small_renewal_spec();
  spec.horizon = 10000;
  spec.samples = 2000;
  spec.moment_order = 5;
  spec.scenery_seeds = {3, 14, 159};
  ExperimentReport report = run_quenched_renewal(spec);
  for (const SeedStats& s : report.seeds) {
    CHECK(std::abs(s.moments[0].value) <= 4.0 * s.moments[0].std_error);   // m(1) exactly centered
    CHECK(std::abs(s.moments[2].value) <= 5.0 * s.moments[2].std_error);   // m(3)
    CHECK(std::abs(s.moments[4].value) <= 5.0 * s.moments[4].std_error);   // m(5)
  }
}

TEST_SUITE_END();
