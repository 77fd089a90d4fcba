#include "rwrs/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "rwrs/errors.hpp"
#include "rwrs/occupation.hpp"
#include "rwrs/parallel.hpp"

namespace rwrs {

namespace {

using ordered_json = nlohmann::ordered_json;

// Substream domain tags: every consumer of randomness hangs off the master
// seed through its own branch, so adding samples to one stage never perturbs
// another.
constexpr std::uint64_t kTagWalks = 0x51;
constexpr std::uint64_t kTagGamma = 0x52;
constexpr std::uint64_t kTagSchedule = 0x53;
constexpr std::uint64_t kTagIntersection = 0x54;
constexpr std::uint64_t kTagGrowth = 0x55;
constexpr std::uint64_t kTagPlanarSelf = 0x56;

class WallClock {
 public:
  WallClock() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------------
// JSON fragments
// ---------------------------------------------------------------------------

ordered_json walk_json(const IncrementLaw& law) {
  ordered_json j;
  std::visit(
      [&](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, RenewalFinite>) {
          j["variant"] = "renewal_finite";
          j["support"] = l.support;
          j["probs"] = l.probs;
        } else if constexpr (std::is_same_v<T, SimpleWalk>) {
          j["variant"] = "simple";
          j["dim"] = l.dim;
        } else if constexpr (std::is_same_v<T, FiniteStepSymmetric>) {
          j["variant"] = "finite_step_symmetric";
          j["dim"] = l.dim;
          ordered_json steps = ordered_json::array();
          for (const Site& s : l.steps) {
            ordered_json step = ordered_json::array();
            for (int d = 0; d < l.dim; ++d) step.push_back(s[d]);
            steps.push_back(std::move(step));
          }
          j["steps"] = std::move(steps);
          j["probs"] = l.probs;
        } else {
          j["variant"] = "stable_tail";
          j["dim"] = l.dim;
          j["alpha"] = l.alpha;
        }
      },
      law);
  return j;
}

ordered_json violations_json(const IncrementLaw& law) {
  ordered_json arr = ordered_json::array();
  for (const HypothesisViolation& v : validate(law)) {
    ordered_json j;
    j["blocks"] = v.blocks ? to_string(*v.blocks) : "all";
    j["message"] = v.message;
    arr.push_back(std::move(j));
  }
  return arr;
}

ordered_json tolerances_json(const Tolerances& t) {
  ordered_json j;
  j["variance_rel"] = t.variance_rel;
  j["fourth_moment_rel"] = t.fourth_moment_rel;
  j["ks_p_min"] = t.ks_p_min;
  j["ks_min_pass_seeds"] = t.ks_min_pass_seeds;
  j["planar_band_lo"] = t.planar_band_lo;
  j["planar_band_hi"] = t.planar_band_hi;
  j["half_time_rel"] = t.half_time_rel;
  j["min_power_samples"] = t.min_power_samples;
  j["mean_rel_tol"] = t.mean_rel_tol;
  j["slope_max"] = t.slope_max;
  j["trend_band_lo"] = t.trend_band_lo;
  j["trend_band_hi"] = t.trend_band_hi;
  j["growth_ratio_bound"] = t.growth_ratio_bound;
  j["stabilization_min_fraction"] = t.stabilization_min_fraction;
  return j;
}

ordered_json moments_json(const std::vector<MomentEstimate>& ms) {
  ordered_json arr = ordered_json::array();
  for (const MomentEstimate& m : ms) {
    ordered_json j;
    j["order"] = m.order;
    j["value"] = m.value;
    j["std_error"] = m.std_error;
    j["gaussian_target"] = m.gaussian_target;
    arr.push_back(std::move(j));
  }
  return arr;
}

ordered_json criteria_json(const std::vector<CriterionResult>& cs) {
  ordered_json arr = ordered_json::array();
  for (const CriterionResult& c : cs) {
    ordered_json j;
    j["name"] = c.name;
    j["passed"] = c.passed;
    j["observed"] = c.observed;
    j["tolerance"] = c.detail;
    if (c.low_power) j["low_power"] = true;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Quenched machinery shared by the three theorems
// ---------------------------------------------------------------------------

void check_quenched_spec(const QuenchedExperimentSpec& spec, Theorem expected) {
  if (spec.theorem != expected) {
    throw UsageError("experiment spec targets theorem '" + to_string(spec.theorem) +
                     "', runner handles '" + to_string(expected) + "'");
  }
  if (spec.horizon < 1) throw UsageError("horizon must be >= 1");
  if (spec.samples < 2) throw UsageError("need at least 2 walk samples per seed");
  if (spec.scenery_seeds.empty()) throw UsageError("at least one scenery seed is required");
  if (spec.moment_order < 1 || spec.moment_order > 8) {
    throw UsageError("moment order must lie in [1,8]");
  }
}

void enforce_admissible(const IncrementLaw& law, Theorem t) {
  std::vector<std::string> blocking;
  for (const HypothesisViolation& v : validate(law)) {
    if (!v.blocks.has_value() || *v.blocks == t) blocking.push_back(v.message);
  }
  if (!blocking.empty()) {
    std::string msg = "walk law is not admissible for the " + to_string(t) + " case:";
    for (const std::string& m : blocking) msg += "\n  - " + m;
    throw UsageError(msg);
  }
}

std::string ecdf_csv_for(std::span<const double> values, double variance) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::ostringstream os;
  os << "sample_value,empirical_cdf,target_normal_cdf\n";
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    os << format_double(sorted[i]) << "," << format_double(static_cast<double>(i + 1) / n) << ","
       << format_double(variance > 0 ? normal_cdf(sorted[i], variance)
                                     : (sorted[i] < 0 ? 0.0 : 1.0))
       << "\n";
  }
  return os.str();
}

struct SeedValues {
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> per_grid;  // grid index -> M values
};

// Across-seed moment diagnostics: mean and sample variance of each m(k).
ordered_json across_seed_json(const std::vector<SeedStats>& seeds) {
  ordered_json j;
  if (seeds.empty()) return j;
  const std::size_t orders = seeds.front().moments.size();
  ordered_json arr = ordered_json::array();
  for (std::size_t k = 0; k < orders; ++k) {
    std::vector<double> vals;
    vals.reserve(seeds.size());
    for (const SeedStats& s : seeds) vals.push_back(s.moments[k].value);
    ordered_json e;
    e["order"] = seeds.front().moments[k].order;
    e["mean"] = sample_mean(vals);
    e["variance_across_seeds"] = vals.size() > 1 ? sample_variance(vals) : 0.0;
    arr.push_back(std::move(e));
  }
  j["moments"] = std::move(arr);
  std::vector<double> variances;
  for (const SeedStats& s : seeds) variances.push_back(s.variance);
  j["mean_variance"] = sample_mean(variances);
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// Report plumbing
// ---------------------------------------------------------------------------

bool ExperimentReport::all_passed() const {
  for (const CriterionResult& c : criteria) {
    if (!c.passed) return false;
  }
  return true;
}

std::string ExperimentReport::full_json() const {
  ordered_json j;
  j["v"] = 1;
  j["body"] = ordered_json::parse(body_json);
  ordered_json timing;
  timing["wall_seconds"] = wall_seconds;
  j["timing"] = std::move(timing);
  return j.dump(2);
}

void write_report_files(const ExperimentReport& report, const std::string& output_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(output_dir);
  auto atomic_write = [&](const std::string& name, const std::string& content) {
    fs::path final_path = fs::path(output_dir) / name;
    fs::path tmp_path = final_path;
    tmp_path += ".tmp";
    {
      std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
      if (!out) throw ResourceError("cannot open " + tmp_path.string() + " for writing");
      out << content;
    }
    fs::rename(tmp_path, final_path);
  };
  atomic_write("report.json", report.full_json() + "\n");
  atomic_write("summary.csv", report.summary_csv);
  if (!report.ecdf_csv.empty()) atomic_write("ecdf.csv", report.ecdf_csv);
}

// ---------------------------------------------------------------------------
// Renewal quenched CLT
// ---------------------------------------------------------------------------

ExperimentReport run_quenched_renewal(const QuenchedExperimentSpec& spec) {
  WallClock clock;
  check_quenched_spec(spec, Theorem::kRenewal);
  enforce_admissible(spec.walk, Theorem::kRenewal);
  WalkModel model(spec.walk);
  const auto& law = std::get<RenewalFinite>(spec.walk);

  VarianceTarget target = variance_target_renewal(law);
  const bool degenerate_target = target.value == 0.0;
  ExpectedLocalTimeTable expected = expected_localtime_renewal(law, spec.horizon);

  RngStream base(spec.master_seed);
  RngStream walks_base = base.child(kTagWalks);
  const double sqrt_n = std::sqrt(static_cast<double>(spec.horizon));

  ExperimentReport report;
  report.kind = "quenched_renewal";
  report.underpowered = spec.samples < spec.tol.min_power_samples;

  std::vector<std::vector<double>> all_values;
  for (std::size_t si = 0; si < spec.scenery_seeds.size(); ++si) {
    SiteField field{spec.scenery_seeds[si], 1, spec.scenery_law};

    // Exact quenched centering from the DP table; never the empirical walk
    // mean (that would bias the variance downward by construction).
    double centering = 0, comp = 0;
    for (std::int64_t i = 1; i <= expected.size(); ++i) {
      Site s{i};
      double term = field.eval(s) * expected.values[static_cast<std::size_t>(i - 1)] - comp;
      double t = centering + term;
      comp = (t - centering) - term;
      centering = t;
    }

    std::vector<double> values(static_cast<std::size_t>(spec.samples));
    RngStream seed_base = walks_base.child(si);
    parallel_for(
        spec.samples, spec.threads,
        [&](std::int64_t j) {
          RngStream g = seed_base.child(static_cast<std::uint64_t>(j));
          double z = rwrs_sum_streaming(model, spec.horizon, field, g);
          values[static_cast<std::size_t>(j)] = (z - centering) / sqrt_n;
        },
        /*grain=*/8);

    SeedStats stats;
    stats.seed = spec.scenery_seeds[si];
    stats.variance = sample_variance(values);
    stats.moments = empirical_moments(values, spec.moment_order, target.value);
    if (!degenerate_target) {
      stats.ks = ks_statistic(values, target.value);
      stats.degenerate = stats.ks.degenerate;
    } else {
      stats.ks = KsResult{1.0, 0.0, true};
      stats.degenerate = true;
    }
    report.seeds.push_back(std::move(stats));
    all_values.push_back(std::move(values));
  }

  // Criteria
  {
    CriterionResult c;
    c.name = "variance_band";
    double worst = 0;
    bool ok = true;
    for (const SeedStats& s : report.seeds) {
      double dev = degenerate_target ? std::abs(s.variance)
                                     : std::abs(s.variance / target.value - 1.0);
      worst = std::max(worst, dev);
      ok = ok && dev <= (degenerate_target ? 1e-12 : spec.tol.variance_rel);
    }
    c.passed = ok;
    c.observed = worst;
    c.detail = degenerate_target
                   ? "degenerate law: per-seed variance must be 0"
                   : "per-seed |variance/" + format_double(target.value) + " - 1| <= " +
                         format_double(spec.tol.variance_rel);
    c.low_power = report.underpowered;
    report.criteria.push_back(std::move(c));
  }
  if (!degenerate_target) {
    CriterionResult c;
    c.name = "ks_seed_quorum";
    int pass_count = 0;
    for (const SeedStats& s : report.seeds) {
      if (s.ks.p_value > spec.tol.ks_p_min) ++pass_count;
    }
    int required =
        std::min<int>(spec.tol.ks_min_pass_seeds, static_cast<int>(report.seeds.size()));
    c.passed = pass_count >= required;
    c.observed = pass_count;
    c.detail = "KS p-value > " + format_double(spec.tol.ks_p_min) + " on >= " +
               std::to_string(required) + " of " + std::to_string(report.seeds.size()) +
               " scenery seeds";
    c.low_power = report.underpowered;
    report.criteria.push_back(std::move(c));

    if (spec.moment_order >= 4) {
      CriterionResult m4;
      m4.name = "fourth_moment_band";
      double m4_target = gaussian_moment(4, target.value);
      double worst = 0;
      bool ok = true;
      for (const SeedStats& s : report.seeds) {
        double dev = std::abs(s.moments[3].value / m4_target - 1.0);
        worst = std::max(worst, dev);
        ok = ok && dev <= spec.tol.fourth_moment_rel;
      }
      m4.passed = ok;
      m4.observed = worst;
      m4.detail = "per-seed |m(4)/" + format_double(m4_target) + " - 1| <= " +
                  format_double(spec.tol.fourth_moment_rel);
      m4.low_power = report.underpowered;
      report.criteria.push_back(std::move(m4));
    }
  } else {
    CriterionResult c;
    c.name = "degenerate_flagged";
    c.passed = true;
    c.observed = 0;
    c.detail = "deterministic walk: all normalized values are 0, distributional checks skipped";
    report.criteria.push_back(std::move(c));
  }

  // Body
  ordered_json body;
  body["kind"] = report.kind;
  ordered_json spec_echo;
  spec_echo["theorem"] = to_string(spec.theorem);
  spec_echo["scenery_law"] = to_string(spec.scenery_law);
  spec_echo["scenery_seeds"] = spec.scenery_seeds;
  spec_echo["walk"] = walk_json(spec.walk);
  spec_echo["n"] = spec.horizon;
  spec_echo["M"] = spec.samples;
  spec_echo["moment_order"] = spec.moment_order;
  spec_echo["master_seed"] = spec.master_seed;
  spec_echo["tolerances"] = tolerances_json(spec.tol);
  body["spec"] = std::move(spec_echo);
  body["walk_validation"] = violations_json(spec.walk);
  body["variance_target"] = ordered_json::parse(target.to_json());
  ordered_json seeds = ordered_json::array();
  for (const SeedStats& s : report.seeds) {
    ordered_json j;
    j["seed"] = s.seed;
    j["variance"] = s.variance;
    j["ks_statistic"] = s.ks.statistic;
    j["ks_p_value"] = s.ks.p_value;
    j["degenerate"] = s.degenerate;
    j["moments"] = moments_json(s.moments);
    seeds.push_back(std::move(j));
  }
  body["seeds"] = std::move(seeds);
  body["across_seeds"] = across_seed_json(report.seeds);
  body["underpowered"] = report.underpowered;
  body["criteria"] = criteria_json(report.criteria);
  report.body_json = body.dump();

  // CSV summary: one row per scenery seed.
  std::ostringstream csv;
  csv << "seed,n,M,variance,target_variance,ks_statistic,ks_p_value,degenerate";
  for (int k = 1; k <= spec.moment_order; ++k) csv << ",m" << k;
  csv << "\n";
  for (const SeedStats& s : report.seeds) {
    csv << s.seed << "," << spec.horizon << "," << spec.samples << ","
        << format_double(s.variance) << "," << format_double(target.value) << ","
        << format_double(s.ks.statistic) << "," << format_double(s.ks.p_value) << ","
        << (s.degenerate ? 1 : 0);
    for (const MomentEstimate& m : s.moments) csv << "," << format_double(m.value);
    csv << "\n";
  }
  report.summary_csv = csv.str();
  report.ecdf_csv = degenerate_target ? "" : ecdf_csv_for(all_values.front(), target.value);
  report.wall_seconds = clock.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// Planar quenched CLT (along t_m)
// ---------------------------------------------------------------------------

ExperimentReport run_quenched_planar(const QuenchedExperimentSpec& spec) {
  WallClock clock;
  check_quenched_spec(spec, Theorem::kPlanar);
  if (spec.horizon < 2) throw UsageError("planar runs need n >= 2 (log n normalization)");
  enforce_admissible(spec.walk, Theorem::kPlanar);
  WalkModel model(spec.walk);

  VarianceTarget target = variance_target_planar(spec.walk);
  RngStream base(spec.master_seed);

  ExperimentReport report;
  report.kind = "quenched_planar";
  report.underpowered = spec.samples < spec.tol.min_power_samples;

  auto run_horizon = [&](std::int64_t n, RngStream seed_base, const SiteField& field) {
    const double norm = std::sqrt(static_cast<double>(n) * std::log(static_cast<double>(n)));
    std::vector<double> values(static_cast<std::size_t>(spec.samples));
    parallel_for(
        spec.samples, spec.threads,
        [&](std::int64_t j) {
          RngStream g = seed_base.child(static_cast<std::uint64_t>(j));
          double z = rwrs_sum_streaming(model, n, field, g);
          values[static_cast<std::size_t>(j)] = z / norm;
        },
        /*grain=*/4);
    return values;
  };

  RngStream walks_base = base.child(kTagWalks);
  std::vector<std::vector<double>> all_values;
  for (std::size_t si = 0; si < spec.scenery_seeds.size(); ++si) {
    SiteField field{spec.scenery_seeds[si], 2, spec.scenery_law};
    std::vector<double> values = run_horizon(spec.horizon, walks_base.child(si), field);

    SeedStats stats;
    stats.seed = spec.scenery_seeds[si];
    stats.variance = sample_variance(values);
    stats.moments = empirical_moments(values, spec.moment_order, target.value);
    stats.ks = ks_statistic(values, target.value);
    stats.degenerate = stats.ks.degenerate;
    report.seeds.push_back(std::move(stats));
    all_values.push_back(std::move(values));
  }

  // t_m schedule: exercised as a schedule-correctness check while the
  // horizons fit the budget, not as a convergence test.
  ordered_json schedule = ordered_json::array();
  RngStream schedule_base = base.child(kTagSchedule);
  for (int m = 1; m <= spec.schedule_max_m; ++m) {
    std::int64_t tm;
    try {
      tm = subsequence_t(m, spec.nu);
    } catch (const ResourceError&) {
      break;
    }
    ordered_json entry;
    entry["m"] = m;
    entry["t_m"] = tm;
    if (tm >= 2 && tm <= spec.horizon) {
      SiteField field{spec.scenery_seeds.front(), 2, spec.scenery_law};
      std::vector<double> values =
          run_horizon(tm, schedule_base.child(static_cast<std::uint64_t>(m)), field);
      entry["variance_ratio"] = sample_variance(values) / target.value;
    }
    schedule.push_back(std::move(entry));
  }

  // Cross-check ingredient for the scenery-averaged second moment:
  // I_n/(n log n) from a few independent paths.
  double i_ratio_mean = 0;
  {
    const std::int64_t paths = 5;
    std::vector<double> ratios(static_cast<std::size_t>(paths));
    RngStream self_base = base.child(kTagPlanarSelf);
    parallel_for(paths, spec.threads, [&](std::int64_t r) {
      SelfIntersectionTracker tracker(2, static_cast<std::size_t>(spec.horizon / 8));
      RngStream g = self_base.child(static_cast<std::uint64_t>(r));
      Site pos{};
      model.with_kernel([&](const auto& kernel) {
        for (std::int64_t k = 0; k < spec.horizon; ++k) {
          kernel.advance(g, pos);
          tracker.add(pos);
        }
      });
      ratios[static_cast<std::size_t>(r)] =
          u128_to_double(tracker.i2()) /
          (static_cast<double>(spec.horizon) * std::log(static_cast<double>(spec.horizon)));
    });
    i_ratio_mean = sample_mean(ratios);
  }

  {
    CriterionResult c;
    c.name = "variance_ratio_band";
    double worst_lo = std::numeric_limits<double>::max(), worst_hi = 0;
    bool ok = true;
    for (const SeedStats& s : report.seeds) {
      double ratio = s.variance / target.value;
      worst_lo = std::min(worst_lo, ratio);
      worst_hi = std::max(worst_hi, ratio);
      ok = ok && ratio >= spec.tol.planar_band_lo && ratio <= spec.tol.planar_band_hi;
    }
    c.passed = ok;
    c.observed = worst_hi;
    c.detail = "per-seed variance/sigma^2 in [" + format_double(spec.tol.planar_band_lo) + ", " +
               format_double(spec.tol.planar_band_hi) + "] (worst low " + format_double(worst_lo) +
               ", worst high " + format_double(worst_hi) + ")";
    c.low_power = report.underpowered;
    report.criteria.push_back(std::move(c));
  }

  ordered_json body;
  body["kind"] = report.kind;
  ordered_json spec_echo;
  spec_echo["theorem"] = to_string(spec.theorem);
  spec_echo["scenery_law"] = to_string(spec.scenery_law);
  spec_echo["scenery_seeds"] = spec.scenery_seeds;
  spec_echo["walk"] = walk_json(spec.walk);
  spec_echo["n"] = spec.horizon;
  spec_echo["M"] = spec.samples;
  spec_echo["moment_order"] = spec.moment_order;
  spec_echo["nu"] = spec.nu;
  spec_echo["schedule_max_m"] = spec.schedule_max_m;
  spec_echo["master_seed"] = spec.master_seed;
  spec_echo["tolerances"] = tolerances_json(spec.tol);
  body["spec"] = std::move(spec_echo);
  body["walk_validation"] = violations_json(spec.walk);
  body["variance_target"] = ordered_json::parse(target.to_json());
  body["note"] =
      "fixed-n planar runs are evidence gathering; the limit is proved along the t_m "
      "subsequence only";
  ordered_json seeds = ordered_json::array();
  for (const SeedStats& s : report.seeds) {
    ordered_json j;
    j["seed"] = s.seed;
    j["variance"] = s.variance;
    j["variance_ratio"] = s.variance / target.value;
    j["ks_statistic"] = s.ks.statistic;
    j["ks_p_value"] = s.ks.p_value;
    j["moments"] = moments_json(s.moments);
    seeds.push_back(std::move(j));
  }
  body["seeds"] = std::move(seeds);
  body["across_seeds"] = across_seed_json(report.seeds);
  body["tm_schedule"] = std::move(schedule);
  body["i_over_nlogn_estimate"] = i_ratio_mean;
  body["underpowered"] = report.underpowered;
  body["criteria"] = criteria_json(report.criteria);
  report.body_json = body.dump();

  std::ostringstream csv;
  csv << "seed,n,M,variance,target_variance,variance_ratio,ks_statistic,ks_p_value\n";
  for (const SeedStats& s : report.seeds) {
    csv << s.seed << "," << spec.horizon << "," << spec.samples << ","
        << format_double(s.variance) << "," << format_double(target.value) << ","
        << format_double(s.variance / target.value) << "," << format_double(s.ks.statistic) << ","
        << format_double(s.ks.p_value) << "\n";
  }
  report.summary_csv = csv.str();
  report.ecdf_csv = ecdf_csv_for(all_values.front(), target.value);
  report.wall_seconds = clock.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// Transient quenched functional CLT
// ---------------------------------------------------------------------------

ExperimentReport run_quenched_transient(const QuenchedExperimentSpec& spec) {
  WallClock clock;
  check_quenched_spec(spec, Theorem::kTransient);
  enforce_admissible(spec.walk, Theorem::kTransient);
  WalkModel model(spec.walk);

  std::vector<double> grid = spec.time_grid;
  if (grid.empty()) grid = {0.25, 0.5, 0.75, 1.0};
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (double t : grid) {
    if (!(t > 0 && t <= 1.0)) throw UsageError("time grid values must lie in (0,1]");
  }
  if (grid.back() != 1.0) grid.push_back(1.0);

  RngStream base(spec.master_seed);

  // Escape probability: estimated with doubling stability unless overridden.
  std::optional<GammaConvergence> gamma_conv;
  double gamma_hat;
  if (spec.gamma_override) {
    gamma_hat = *spec.gamma_override;
  } else {
    if (spec.gamma_horizon < 1 || spec.gamma_samples < 1) {
      throw UsageError("transient runs need gamma_horizon and gamma_samples (or gamma_override)");
    }
    gamma_conv = estimate_gamma_with_doubling(model, spec.gamma_horizon, spec.gamma_samples,
                                              base.child(kTagGamma), spec.threads);
    gamma_hat = gamma_conv->at_doubled.gamma_hat;
  }
  VarianceTarget target = variance_target_transient(gamma_hat);

  ExperimentReport report;
  report.kind = "quenched_transient";
  report.underpowered = spec.samples < spec.tol.min_power_samples;

  const double sqrt_n = std::sqrt(static_cast<double>(spec.horizon));
  const std::size_t terminal = grid.size() - 1;
  std::optional<std::size_t> half_index;
  for (std::size_t ti = 0; ti < grid.size(); ++ti) {
    if (std::abs(grid[ti] - 0.5) < 1e-12) half_index = ti;
  }

  RngStream walks_base = base.child(kTagWalks);
  std::vector<SeedValues> all_values;
  ordered_json seeds_json = ordered_json::array();
  for (std::size_t si = 0; si < spec.scenery_seeds.size(); ++si) {
    SiteField field{spec.scenery_seeds[si], model.dim(), spec.scenery_law};
    SeedValues sv;
    sv.seed = spec.scenery_seeds[si];
    sv.per_grid.assign(grid.size(),
                       std::vector<double>(static_cast<std::size_t>(spec.samples), 0.0));
    RngStream seed_base = walks_base.child(si);
    parallel_for(
        spec.samples, spec.threads,
        [&](std::int64_t j) {
          RngStream g = seed_base.child(static_cast<std::uint64_t>(j));
          std::vector<double> zs = rwrs_partial_sums(model, spec.horizon, grid, field, g);
          for (std::size_t ti = 0; ti < grid.size(); ++ti) {
            sv.per_grid[ti][static_cast<std::size_t>(j)] = zs[ti] / sqrt_n;
          }
        },
        /*grain=*/4);

    SeedStats stats;
    stats.seed = sv.seed;
    stats.variance = sample_variance(sv.per_grid[terminal]);
    stats.moments = empirical_moments(sv.per_grid[terminal], spec.moment_order, target.value);
    stats.ks = ks_statistic(sv.per_grid[terminal], target.value);
    stats.degenerate = stats.ks.degenerate;

    ordered_json j;
    j["seed"] = sv.seed;
    ordered_json per_t = ordered_json::array();
    for (std::size_t ti = 0; ti < grid.size(); ++ti) {
      ordered_json e;
      e["t"] = grid[ti];
      e["variance"] = sample_variance(sv.per_grid[ti]);
      e["target"] = target.value * grid[ti];
      per_t.push_back(std::move(e));
    }
    j["variance_by_t"] = std::move(per_t);
    j["terminal_variance"] = stats.variance;
    j["ks_statistic"] = stats.ks.statistic;
    j["ks_p_value"] = stats.ks.p_value;
    if (half_index) {
      std::vector<double> increments(static_cast<std::size_t>(spec.samples));
      for (std::size_t k = 0; k < increments.size(); ++k) {
        increments[k] = sv.per_grid[terminal][k] - sv.per_grid[*half_index][k];
      }
      j["increment_correlation"] = sample_correlation(sv.per_grid[*half_index], increments);
      j["half_to_terminal_variance_ratio"] =
          sample_variance(sv.per_grid[*half_index]) / stats.variance;
    }
    j["moments"] = moments_json(stats.moments);
    seeds_json.push_back(std::move(j));

    report.seeds.push_back(std::move(stats));
    all_values.push_back(std::move(sv));
  }

  // Criteria
  {
    CriterionResult c;
    c.name = "terminal_variance_band";
    double worst = 0;
    bool ok = true;
    for (const SeedStats& s : report.seeds) {
      double dev = std::abs(s.variance / target.value - 1.0);
      worst = std::max(worst, dev);
      ok = ok && dev <= spec.tol.variance_rel;
    }
    c.passed = ok;
    c.observed = worst;
    c.detail = "per-seed |variance/" + format_double(target.value) + " - 1| <= " +
               format_double(spec.tol.variance_rel) + " (sigma^2 = (2-gamma)/gamma at gamma_hat " +
               format_double(gamma_hat) + ")";
    c.low_power = report.underpowered;
    report.criteria.push_back(std::move(c));
  }
  if (half_index) {
    CriterionResult c;
    c.name = "half_time_variance";
    double worst = 0;
    bool ok = true;
    for (std::size_t si = 0; si < all_values.size(); ++si) {
      double ratio =
          sample_variance(all_values[si].per_grid[*half_index]) / report.seeds[si].variance;
      double dev = std::abs(ratio / 0.5 - 1.0);
      worst = std::max(worst, dev);
      ok = ok && dev <= spec.tol.half_time_rel;
    }
    c.passed = ok;
    c.observed = worst;
    c.detail = "per-seed |var(t=0.5)/(0.5 var(t=1)) - 1| <= " +
               format_double(spec.tol.half_time_rel) + " (Brownian variance linearity)";
    c.low_power = report.underpowered;
    report.criteria.push_back(std::move(c));
  }
  {
    CriterionResult c;
    c.name = "ks_seed_quorum";
    int pass_count = 0;
    for (const SeedStats& s : report.seeds) {
      if (s.ks.p_value > spec.tol.ks_p_min) ++pass_count;
    }
    int required =
        std::min<int>(spec.tol.ks_min_pass_seeds, static_cast<int>(report.seeds.size()));
    c.passed = pass_count >= required;
    c.observed = pass_count;
    c.detail = "KS p-value > " + format_double(spec.tol.ks_p_min) + " on >= " +
               std::to_string(required) + " of " + std::to_string(report.seeds.size()) +
               " scenery seeds";
    c.low_power = report.underpowered;
    report.criteria.push_back(std::move(c));
  }
  if (gamma_conv) {
    CriterionResult c;
    c.name = "gamma_doubling_stable";
    c.passed = gamma_conv->converged;
    c.observed = gamma_conv->delta;
    c.detail = "|gamma(T) - gamma(2T)| = " + format_double(gamma_conv->delta) +
               " < 2 stderr = " + format_double(2.0 * gamma_conv->at_horizon.std_error);
    report.criteria.push_back(std::move(c));
  }

  ordered_json body;
  body["kind"] = report.kind;
  ordered_json spec_echo;
  spec_echo["theorem"] = to_string(spec.theorem);
  spec_echo["scenery_law"] = to_string(spec.scenery_law);
  spec_echo["scenery_seeds"] = spec.scenery_seeds;
  spec_echo["walk"] = walk_json(spec.walk);
  spec_echo["n"] = spec.horizon;
  spec_echo["M"] = spec.samples;
  spec_echo["time_grid"] = grid;
  spec_echo["moment_order"] = spec.moment_order;
  spec_echo["gamma_horizon"] = spec.gamma_horizon;
  spec_echo["gamma_samples"] = spec.gamma_samples;
  if (spec.gamma_override) spec_echo["gamma_override"] = *spec.gamma_override;
  spec_echo["master_seed"] = spec.master_seed;
  spec_echo["tolerances"] = tolerances_json(spec.tol);
  body["spec"] = std::move(spec_echo);
  body["walk_validation"] = violations_json(spec.walk);
  if (gamma_conv) body["gamma"] = ordered_json::parse(gamma_conv->to_json());
  body["variance_target"] = ordered_json::parse(target.to_json());
  body["seeds"] = std::move(seeds_json);
  body["across_seeds"] = across_seed_json(report.seeds);
  body["underpowered"] = report.underpowered;
  body["criteria"] = criteria_json(report.criteria);
  report.body_json = body.dump();

  std::ostringstream csv;
  csv << "seed,n,M,terminal_variance,target_variance,ks_statistic,ks_p_value\n";
  for (const SeedStats& s : report.seeds) {
    csv << s.seed << "," << spec.horizon << "," << spec.samples << ","
        << format_double(s.variance) << "," << format_double(target.value) << ","
        << format_double(s.ks.statistic) << "," << format_double(s.ks.p_value) << "\n";
  }
  report.summary_csv = csv.str();
  report.ecdf_csv = ecdf_csv_for(all_values.front().per_grid[terminal], target.value);
  report.wall_seconds = clock.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// Intersection suite
// ---------------------------------------------------------------------------

namespace {

ExperimentReport intersection_suite_renewal(const IntersectionSuiteSpec& spec,
                                            const WalkModel& model) {
  WallClock clock;
  const auto& law = std::get<RenewalFinite>(spec.law);
  const double m = law.mean();
  const double q_limit = 1.0 / m;
  const double j_limit = 1.0 - 1.0 / m;

  ExperimentReport report;
  report.kind = "intersection_suite_renewal";

  RngStream base = RngStream(spec.master_seed).child(kTagIntersection);
  struct HorizonRow {
    std::int64_t horizon;
    double mean_q_over_n;
    double mean_j_over_n;
    double mean_sq_dev_q;
  };
  std::vector<HorizonRow> rows;

  for (std::size_t hi = 0; hi < spec.horizons.size(); ++hi) {
    const std::int64_t h = spec.horizons[hi];
    if (h < 1) throw UsageError("horizons must be >= 1");
    ExpectedLocalTimeTable expected = expected_localtime_renewal(law, h);
    std::vector<double> q_over_n(static_cast<std::size_t>(spec.replicas));
    std::vector<double> j_over_n(static_cast<std::size_t>(2 * spec.replicas));
    RngStream horizon_base = base.child(hi);
    parallel_for(spec.replicas, spec.threads, [&](std::int64_t p) {
      RngStream g1 = horizon_base.child(static_cast<std::uint64_t>(2 * p));
      RngStream g2 = horizon_base.child(static_cast<std::uint64_t>(2 * p + 1));
      OccupationTable t1 = accumulate_walk(model, h, g1);
      OccupationTable t2 = accumulate_walk(model, h, g2);
      q_over_n[static_cast<std::size_t>(p)] =
          u128_to_double(mutual_intersection(t1, t2, 1, 1)) / static_cast<double>(h);
      j_over_n[static_cast<std::size_t>(2 * p)] =
          recentered_moment(t1, expected, 2) / static_cast<double>(h);
      j_over_n[static_cast<std::size_t>(2 * p + 1)] =
          recentered_moment(t2, expected, 2) / static_cast<double>(h);
    });

    HorizonRow row;
    row.horizon = h;
    row.mean_q_over_n = sample_mean(q_over_n);
    row.mean_j_over_n = sample_mean(j_over_n);
    double msd = 0;
    for (double q : q_over_n) msd += (q - q_limit) * (q - q_limit);
    row.mean_sq_dev_q = msd / static_cast<double>(spec.replicas);
    rows.push_back(row);
  }

  const HorizonRow& last = rows.back();
  {
    CriterionResult c;
    c.name = "q_over_n_limit";
    double dev = std::abs(last.mean_q_over_n / q_limit - 1.0);
    c.passed = dev <= spec.tol.mean_rel_tol;
    c.observed = dev;
    c.detail = "mean Q_n/n at n=" + std::to_string(last.horizon) + " within " +
               format_double(spec.tol.mean_rel_tol) + " of 1/m = " + format_double(q_limit);
    report.criteria.push_back(std::move(c));
  }
  {
    CriterionResult c;
    c.name = "j_over_n_limit";
    double dev = std::abs(last.mean_j_over_n / j_limit - 1.0);
    c.passed = dev <= spec.tol.mean_rel_tol;
    c.observed = dev;
    c.detail = "mean J_n/n at n=" + std::to_string(last.horizon) + " within " +
               format_double(spec.tol.mean_rel_tol) + " of 1-1/m = " + format_double(j_limit);
    report.criteria.push_back(std::move(c));
  }
  if (rows.size() >= 2) {
    std::vector<double> xs, ys;
    for (const HorizonRow& r : rows) {
      if (r.mean_sq_dev_q > 0) {
        xs.push_back(std::log10(static_cast<double>(r.horizon)));
        ys.push_back(std::log10(r.mean_sq_dev_q));
      }
    }
    CriterionResult c;
    c.name = "q_decay_slope";
    if (xs.size() >= 2) {
      double slope = regression_slope(xs, ys);
      c.passed = slope <= spec.tol.slope_max;
      c.observed = slope;
      c.detail = "log-log slope of E (Q_n/n - 1/m)^2 over the horizon grid <= " +
                 format_double(spec.tol.slope_max) + " (theoretical order -1)";
    } else {
      c.passed = false;
      c.observed = 0;
      c.detail = "slope undefined: mean squared deviations vanished on the grid";
    }
    report.criteria.push_back(std::move(c));
  }

  ordered_json body;
  body["kind"] = report.kind;
  ordered_json spec_echo;
  spec_echo["walk"] = walk_json(spec.law);
  spec_echo["horizons"] = spec.horizons;
  spec_echo["replica_pairs"] = spec.replicas;
  spec_echo["master_seed"] = spec.master_seed;
  spec_echo["tolerances"] = tolerances_json(spec.tol);
  body["spec"] = std::move(spec_echo);
  body["walk_validation"] = violations_json(spec.law);
  body["q_limit"] = q_limit;
  body["j_limit"] = j_limit;
  ordered_json jrows = ordered_json::array();
  for (const HorizonRow& r : rows) {
    ordered_json j;
    j["n"] = r.horizon;
    j["mean_q_over_n"] = r.mean_q_over_n;
    j["mean_j_over_n"] = r.mean_j_over_n;
    j["mean_sq_dev_q"] = r.mean_sq_dev_q;
    jrows.push_back(std::move(j));
  }
  body["horizons"] = std::move(jrows);
  body["criteria"] = criteria_json(report.criteria);
  report.body_json = body.dump();

  std::ostringstream csv;
  csv << "horizon,pairs,mean_q_over_n,q_limit,mean_j_over_n,j_limit,mean_sq_dev_q\n";
  for (const HorizonRow& r : rows) {
    csv << r.horizon << "," << spec.replicas << "," << format_double(r.mean_q_over_n) << ","
        << format_double(q_limit) << "," << format_double(r.mean_j_over_n) << ","
        << format_double(j_limit) << "," << format_double(r.mean_sq_dev_q) << "\n";
  }
  report.summary_csv = csv.str();
  report.wall_seconds = clock.seconds();
  return report;
}

ExperimentReport intersection_suite_planar(const IntersectionSuiteSpec& spec,
                                           const WalkModel& model) {
  WallClock clock;
  const double sigma2 = variance_planar(covariance(spec.law));

  ExperimentReport report;
  report.kind = "intersection_suite_planar";

  const std::int64_t max_h = spec.horizons.back();
  std::vector<std::vector<double>> ratios(
      spec.horizons.size(), std::vector<double>(static_cast<std::size_t>(spec.replicas)));
  RngStream base = RngStream(spec.master_seed).child(kTagIntersection);
  parallel_for(spec.replicas, spec.threads, [&](std::int64_t r) {
    SelfIntersectionTracker tracker(model.dim(), static_cast<std::size_t>(max_h / 8));
    RngStream g = base.child(static_cast<std::uint64_t>(r));
    Site pos{};
    std::size_t next = 0;
    model.with_kernel([&](const auto& kernel) {
      for (std::int64_t k = 1; k <= max_h; ++k) {
        kernel.advance(g, pos);
        tracker.add(pos);
        while (next < spec.horizons.size() && spec.horizons[next] == k) {
          ratios[next][static_cast<std::size_t>(r)] =
              u128_to_double(tracker.i2()) /
              (static_cast<double>(k) * std::log(static_cast<double>(k)));
          ++next;
        }
      }
    });
  });

  std::vector<double> mean_abs_dev(spec.horizons.size());
  for (std::size_t hi = 0; hi < spec.horizons.size(); ++hi) {
    double acc = 0;
    for (double v : ratios[hi]) acc += std::abs(v - sigma2);
    mean_abs_dev[hi] = acc / static_cast<double>(spec.replicas);
  }

  {
    CriterionResult c;
    c.name = "i_over_nlogn_band";
    bool ok = true;
    double worst_lo = std::numeric_limits<double>::max(), worst_hi = 0;
    for (double v : ratios.back()) {
      double ratio = v / sigma2;
      worst_lo = std::min(worst_lo, ratio);
      worst_hi = std::max(worst_hi, ratio);
      ok = ok && ratio >= spec.tol.trend_band_lo && ratio <= spec.tol.trend_band_hi;
    }
    c.passed = ok;
    c.observed = worst_hi;
    c.detail = "per-path I_n/(n log n) / sigma^2 at n=" + std::to_string(spec.horizons.back()) +
               " in [" + format_double(spec.tol.trend_band_lo) + ", " +
               format_double(spec.tol.trend_band_hi) + "] (worst low " + format_double(worst_lo) +
               ")";
    report.criteria.push_back(std::move(c));
  }
  if (spec.horizons.size() >= 2) {
    CriterionResult c;
    c.name = "i_trend_narrows";
    c.passed = mean_abs_dev.back() < mean_abs_dev.front();
    c.observed = mean_abs_dev.back();
    c.detail = "mean |I_n/(n log n) - sigma^2| shrinks from n=" +
               std::to_string(spec.horizons.front()) + " (" + format_double(mean_abs_dev.front()) +
               ") to n=" + std::to_string(spec.horizons.back()) + " (" +
               format_double(mean_abs_dev.back()) + ")";
    report.criteria.push_back(std::move(c));
  }

  ordered_json body;
  body["kind"] = report.kind;
  ordered_json spec_echo;
  spec_echo["walk"] = walk_json(spec.law);
  spec_echo["horizons"] = spec.horizons;
  spec_echo["paths"] = spec.replicas;
  spec_echo["master_seed"] = spec.master_seed;
  spec_echo["tolerances"] = tolerances_json(spec.tol);
  body["spec"] = std::move(spec_echo);
  body["walk_validation"] = violations_json(spec.law);
  body["sigma2"] = sigma2;
  ordered_json jrows = ordered_json::array();
  for (std::size_t hi = 0; hi < spec.horizons.size(); ++hi) {
    ordered_json j;
    j["n"] = spec.horizons[hi];
    j["ratios"] = ratios[hi];
    j["mean_abs_dev"] = mean_abs_dev[hi];
    jrows.push_back(std::move(j));
  }
  body["horizons"] = std::move(jrows);
  body["criteria"] = criteria_json(report.criteria);
  report.body_json = body.dump();

  std::ostringstream csv;
  csv << "horizon,paths,mean_ratio,sigma2,mean_abs_dev\n";
  for (std::size_t hi = 0; hi < spec.horizons.size(); ++hi) {
    csv << spec.horizons[hi] << "," << spec.replicas << ","
        << format_double(sample_mean(ratios[hi])) << "," << format_double(sigma2) << ","
        << format_double(mean_abs_dev[hi]) << "\n";
  }
  report.summary_csv = csv.str();
  report.wall_seconds = clock.seconds();
  return report;
}

}  // namespace

ExperimentReport run_intersection_suite(const IntersectionSuiteSpec& spec) {
  if (spec.horizons.empty()) throw UsageError("intersection suite: no horizons");
  if (!std::is_sorted(spec.horizons.begin(), spec.horizons.end())) {
    throw UsageError("intersection suite: horizons must be ascending");
  }
  if (spec.replicas < 2) throw UsageError("intersection suite: need at least 2 replicas");
  WalkModel model(spec.law);
  if (model.renewal()) return intersection_suite_renewal(spec, model);
  if (admissible(spec.law, Theorem::kPlanar)) return intersection_suite_planar(spec, model);
  throw UsageError(
      "intersection suite handles renewal laws (Q_n, J_n) and planar symmetric laws (I_n); "
      "use the growth suite for transient laws");
}

// ---------------------------------------------------------------------------
// Growth suite
// ---------------------------------------------------------------------------

std::string growth_regime_name(const IncrementLaw& law) {
  if (std::holds_alternative<StableTail>(law)) {
    const auto& l = std::get<StableTail>(law);
    double half_d = static_cast<double>(l.dim) / 2.0;
    if (l.alpha < half_d) return "bounded";
    if (l.alpha == half_d) return "log";
    return "power";  // n^(2 - d/alpha)
  }
  int d = dimension(law);
  if (is_renewal(law)) return "linear";
  if (d == 2) return "linear";
  if (d == 3) return "sqrt";
  if (d == 4) return "log";
  return "bounded";
}

bool growth_regime_bounded(const IncrementLaw& law) {
  return growth_regime_name(law) == "bounded";
}

double growth_normalizer(const IncrementLaw& law, std::int64_t n) {
  const double x = static_cast<double>(n);
  std::string regime = growth_regime_name(law);
  if (regime == "bounded") return 1.0;
  if (regime == "log") return std::log(x);
  if (regime == "sqrt") return std::sqrt(x);
  if (regime == "linear") return x;
  const auto& l = std::get<StableTail>(law);
  return std::pow(x, 2.0 - static_cast<double>(l.dim) / l.alpha);
}

ExperimentReport run_growth_suite(const GrowthSuiteSpec& spec) {
  WallClock clock;
  if (spec.horizons.size() < 2) throw UsageError("growth suite: need at least 2 horizons");
  if (!std::is_sorted(spec.horizons.begin(), spec.horizons.end())) {
    throw UsageError("growth suite: horizons must be ascending");
  }
  if (spec.pairs < 2) throw UsageError("growth suite: need at least 2 replica pairs");
  WalkModel model(spec.law);
  if (model.renewal()) {
    throw UsageError("growth suite: renewal mutual intersections belong to the intersection suite");
  }

  ExperimentReport report;
  report.kind = "growth_suite";
  const std::string regime = growth_regime_name(spec.law);
  const bool bounded = growth_regime_bounded(spec.law);

  const std::int64_t max_h = spec.horizons.back();
  std::vector<std::vector<double>> q_at(
      spec.horizons.size(), std::vector<double>(static_cast<std::size_t>(spec.pairs)));
  RngStream base = RngStream(spec.master_seed).child(kTagGrowth);
  parallel_for(spec.pairs, spec.threads, [&](std::int64_t p) {
    MutualIntersectionTracker tracker(model.dim(), static_cast<std::size_t>(max_h / 8));
    RngStream g1 = base.child(static_cast<std::uint64_t>(2 * p));
    RngStream g2 = base.child(static_cast<std::uint64_t>(2 * p + 1));
    Site pos1{}, pos2{};
    std::size_t next = 0;
    model.with_kernel([&](const auto& kernel) {
      for (std::int64_t k = 1; k <= max_h; ++k) {
        kernel.advance(g1, pos1);
        kernel.advance(g2, pos2);
        tracker.add_pair(pos1, pos2);
        while (next < spec.horizons.size() && spec.horizons[next] == k) {
          q_at[next][static_cast<std::size_t>(p)] = u128_to_double(tracker.q());
          ++next;
        }
      }
    });
  });

  struct Row {
    std::int64_t horizon;
    double mean_q, mean_q_sq, normalizer, normalized, normalized_sq, median;
  };
  std::vector<Row> rows;
  for (std::size_t hi = 0; hi < spec.horizons.size(); ++hi) {
    Row r;
    r.horizon = spec.horizons[hi];
    r.mean_q = sample_mean(q_at[hi]);
    double sq = 0;
    for (double q : q_at[hi]) sq += q * q;
    r.mean_q_sq = sq / static_cast<double>(spec.pairs);
    r.normalizer = growth_normalizer(spec.law, r.horizon);
    r.normalized = r.mean_q / r.normalizer;
    r.normalized_sq = r.mean_q_sq / (r.normalizer * r.normalizer);
    std::vector<double> sorted = q_at[hi];
    std::sort(sorted.begin(), sorted.end());
    r.median = sorted[sorted.size() / 2];
    rows.push_back(r);
  }

  {
    CriterionResult c;
    c.name = "normalized_mean_bounded";
    double lo = std::numeric_limits<double>::max(), hi_v = 0;
    for (const Row& r : rows) {
      lo = std::min(lo, r.normalized);
      hi_v = std::max(hi_v, r.normalized);
    }
    double ratio = lo > 0 ? hi_v / lo : std::numeric_limits<double>::infinity();
    c.passed = ratio <= spec.tol.growth_ratio_bound;
    c.observed = ratio;
    c.detail = "max/min of E Q_n over the " + regime + " normalizer across the grid <= " +
               format_double(spec.tol.growth_ratio_bound);
    report.criteria.push_back(std::move(c));
  }
  {
    CriterionResult c;
    c.name = "normalized_second_moment_bounded";
    double lo = std::numeric_limits<double>::max(), hi_v = 0;
    for (const Row& r : rows) {
      lo = std::min(lo, r.normalized_sq);
      hi_v = std::max(hi_v, r.normalized_sq);
    }
    double bound = spec.tol.growth_ratio_bound * spec.tol.growth_ratio_bound;
    double ratio = lo > 0 ? hi_v / lo : std::numeric_limits<double>::infinity();
    c.passed = ratio <= bound;
    c.observed = ratio;
    c.detail = "max/min of E Q_n^2 over the squared normalizer across the grid <= " +
               format_double(bound);
    report.criteria.push_back(std::move(c));
  }
  double stabilized_fraction = 0;
  if (bounded) {
    const auto& last = q_at.back();
    const auto& prev = q_at[q_at.size() - 2];
    std::int64_t stable_count = 0;
    for (std::size_t p = 0; p < last.size(); ++p) {
      if (last[p] == prev[p]) ++stable_count;
    }
    stabilized_fraction = static_cast<double>(stable_count) / static_cast<double>(spec.pairs);
    CriterionResult c;
    c.name = "q_stabilization";
    bool medians_equal = rows.back().median == rows[rows.size() - 2].median;
    c.passed = stabilized_fraction >= spec.tol.stabilization_min_fraction && medians_equal;
    c.observed = stabilized_fraction;
    c.detail = "fraction of pairs with Q unchanged over the last horizon step >= " +
               format_double(spec.tol.stabilization_min_fraction) +
               " and medians equal (Q_infinity a.s. finite in this regime)";
    report.criteria.push_back(std::move(c));
  }

  ordered_json body;
  body["kind"] = report.kind;
  ordered_json spec_echo;
  spec_echo["walk"] = walk_json(spec.law);
  spec_echo["horizons"] = spec.horizons;
  spec_echo["pairs"] = spec.pairs;
  spec_echo["master_seed"] = spec.master_seed;
  spec_echo["tolerances"] = tolerances_json(spec.tol);
  body["spec"] = std::move(spec_echo);
  body["walk_validation"] = violations_json(spec.law);
  body["regime"] = regime;
  ordered_json jrows = ordered_json::array();
  for (const Row& r : rows) {
    ordered_json j;
    j["n"] = r.horizon;
    j["mean_q"] = r.mean_q;
    j["mean_q_sq"] = r.mean_q_sq;
    j["normalizer"] = r.normalizer;
    j["normalized_mean"] = r.normalized;
    j["normalized_sq"] = r.normalized_sq;
    j["median_q"] = r.median;
    jrows.push_back(std::move(j));
  }
  body["horizons"] = std::move(jrows);
  if (bounded) body["stabilized_fraction"] = stabilized_fraction;
  body["criteria"] = criteria_json(report.criteria);
  report.body_json = body.dump();

  std::ostringstream csv;
  csv << "horizon,pairs,mean_q,mean_q_sq,normalizer,normalized_mean,normalized_sq,median_q\n";
  for (const Row& r : rows) {
    csv << r.horizon << "," << spec.pairs << "," << format_double(r.mean_q) << ","
        << format_double(r.mean_q_sq) << "," << format_double(r.normalizer) << ","
        << format_double(r.normalized) << "," << format_double(r.normalized_sq) << ","
        << format_double(r.median) << "\n";
  }
  report.summary_csv = csv.str();
  report.wall_seconds = clock.seconds();
  return report;
}

}  // namespace rwrs
