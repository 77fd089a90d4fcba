#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rwrs/limits.hpp"
#include "rwrs/scenery.hpp"
#include "rwrs/stats.hpp"
#include "rwrs/walks.hpp"

namespace rwrs {

// ---------------------------------------------------------------------------
// Experiment specifications
// ---------------------------------------------------------------------------

// Acceptance bands. The limit theorems are asymptotic; these are desk-scale
// engineering tolerances, echoed verbatim into every report.
struct Tolerances {
  double variance_rel = 0.09;        // terminal variance band (renewal 9%, transient 7%)
  double fourth_moment_rel = 0.15;
  double ks_p_min = 0.001;
  int ks_min_pass_seeds = 4;
  double planar_band_lo = 0.7;       // quenched planar variance ratio band
  double planar_band_hi = 1.4;
  double half_time_rel = 0.10;       // var(Z at t=0.5) vs half the terminal variance
  std::int64_t min_power_samples = 1000;
  double mean_rel_tol = 0.02;        // intersection suite: Q/n and J/n vs their limits
  double slope_max = -0.8;           // decay slope of E (Q/n - 1/m)^2
  double trend_band_lo = 0.8;        // planar I_n/(n log n) per-path band at the last horizon
  double trend_band_hi = 1.3;
  double growth_ratio_bound = 3.0;   // max/min of normalized E Q_n over the grid
  double stabilization_min_fraction = 0.95;
};

struct QuenchedExperimentSpec {
  Theorem theorem = Theorem::kRenewal;
  SceneryLaw scenery_law = SceneryLaw::kRademacher;
  std::vector<std::uint64_t> scenery_seeds;
  IncrementLaw walk;
  std::int64_t horizon = 0;                 // n
  std::int64_t samples = 0;                 // M walks per scenery seed
  std::vector<double> time_grid;            // transient; must contain 1.0
  int moment_order = 4;                     // K <= 8
  double nu = 1.0;                          // planar schedule exponent
  int schedule_max_m = 3;                   // planar: run t_m for m = 1..max
  std::int64_t gamma_horizon = 0;           // transient: T for gamma estimation
  std::int64_t gamma_samples = 0;
  std::optional<double> gamma_override;     // skip estimation when supplied
  std::uint64_t master_seed = 1;
  int threads = 0;                          // 0 = hardware
  Tolerances tol;
};

struct IntersectionSuiteSpec {
  IncrementLaw law;
  std::vector<std::int64_t> horizons;
  std::int64_t replicas = 100;              // pairs (renewal) or paths (planar)
  std::uint64_t master_seed = 1;
  int threads = 0;
  Tolerances tol;
};

struct GrowthSuiteSpec {
  IncrementLaw law;
  std::vector<std::int64_t> horizons;       // geometric grid, ascending
  std::int64_t pairs = 100;
  std::uint64_t master_seed = 1;
  int threads = 0;
  Tolerances tol;
};

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct CriterionResult {
  std::string name;
  bool passed = false;
  double observed = 0;
  std::string detail;       // cites the tolerance the value was judged against
  bool low_power = false;
};

// Per-scenery-seed quenched statistics (subset used programmatically; the
// full detail lives in body_json).
struct SeedStats {
  std::uint64_t seed = 0;
  double variance = 0;
  KsResult ks;
  std::vector<MomentEstimate> moments;
  bool degenerate = false;
};

struct ExperimentReport {
  std::string kind;
  bool underpowered = false;
  std::vector<CriterionResult> criteria;
  std::vector<SeedStats> seeds;      // quenched experiments only

  // Deterministic serialized artifacts. body_json is bit-identical across
  // re-runs with the same spec, including different thread counts.
  std::string body_json;
  std::string summary_csv;
  std::string ecdf_csv;              // empty for suites

  double wall_seconds = 0;           // timing lives outside the body

  bool all_passed() const;
  std::string full_json() const;     // {"v": 1, "body": ..., "timing": ...}
};

// Write report.json, summary.csv and (when present) ecdf.csv into
// `output_dir`, creating it if needed. Files are written atomically
// (write-then-rename).
void write_report_files(const ExperimentReport& report, const std::string& output_dir);

// ---------------------------------------------------------------------------
// Experiment runners
// ---------------------------------------------------------------------------

// Renewal quenched CLT: fixes each scenery, recenters by the exact quenched
// mean sum_i omega_i E N_n(i) from the DP table, and tests
// (Z_n - E^ Z_n)/sqrt(n) against N(0, 1 - 1/m).
ExperimentReport run_quenched_renewal(const QuenchedExperimentSpec& spec);

// Planar quenched CLT along t_m: Z_n / sqrt(n log n) against N(0, sigma^2),
// sigma^2 = (2 pi sqrt(det Sigma))^-1. Fixed-n runs are evidence gathering
// (the theorem is proved along t_m only); the t_m schedule itself is also
// exercised while the horizons fit the budget.
ExperimentReport run_quenched_planar(const QuenchedExperimentSpec& spec);

// Transient functional CLT: Z_[nt]/sqrt(n) against sigma B_t with
// sigma^2 = (2-gamma)/gamma; gamma estimated with doubling stability unless
// overridden.
ExperimentReport run_quenched_transient(const QuenchedExperimentSpec& spec);

// Renewal laws: per-pair Q_n/n and per-path J_n/n against 1/m and 1 - 1/m,
// plus the 1/n decay slope of E (Q_n/n - 1/m)^2 over the horizon grid.
// Planar laws: per-path trend of I_n/(n log n) toward sigma^2.
ExperimentReport run_intersection_suite(const IntersectionSuiteSpec& spec);

// Moment-growth regimes: E Q_n (and E Q_n^2) normalized by the regime's
// predicted growth over a geometric horizon grid; bounded-regime laws
// additionally report Q stabilization across horizon doubling.
ExperimentReport run_growth_suite(const GrowthSuiteSpec& spec);

// Predicted growth g(n) of E Q_n for the law's regime (sqrt(n), log n,
// bounded, n^(2 - d/alpha), or n for planar).
double growth_normalizer(const IncrementLaw& law, std::int64_t n);
std::string growth_regime_name(const IncrementLaw& law);
bool growth_regime_bounded(const IncrementLaw& law);

}  // namespace rwrs
