#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "rwrs/occupation.hpp"
#include "rwrs/rng.hpp"
#include "rwrs/walks.hpp"

namespace rwrs {

// ---------------------------------------------------------------------------
// Closed-form limit variances
// ---------------------------------------------------------------------------

// Renewal case: 1 - 1/m for interarrival mean m. m = 1 is the degenerate
// deterministic walk (variance 0); m < 1 is impossible for positive steps.
double variance_renewal(double m);

// Planar case: (2 pi sqrt(det Sigma))^-1 for a symmetric positive-definite
// 2x2 covariance matrix.
double variance_planar(const SquareMatrix& sigma);

// Transient case: gamma^2 sum_{k>=1} k^2 (1-gamma)^(k-1). Evaluated both by
// the closed form (2-gamma)/gamma and by truncated summation (terms below
// 1e-15); the two must agree to 1e-12 relative or an IntegrityError is
// raised. Returns the closed form.
double variance_transient(double gamma);

// ---------------------------------------------------------------------------
// Escape probability gamma = P(S_k != 0 for all k >= 1)
// ---------------------------------------------------------------------------

struct GammaEstimate {
  double gamma_hat = 0;   // upper-biased: the event is over k <= horizon only
  double std_error = 0;   // binomial
  std::int64_t horizon = 0;
  std::int64_t samples = 0;

  std::string to_json() const;
};

// Doubling-stability record: both estimates come from the same nested paths
// (a path alive at 2T was alive at T), so gamma_hat is non-increasing by
// construction and `delta` is the fraction that died in (T, 2T].
struct GammaConvergence {
  GammaEstimate at_horizon;
  GammaEstimate at_doubled;
  double delta = 0;
  bool converged = false;  // delta < 2 * std_error at the base horizon

  std::string to_json() const;
};

// Fraction of `samples` independent paths with S_k != 0 for 1 <= k <= horizon.
// Strictly increasing (renewal) walks short-circuit to gamma_hat = 1 exactly.
// The caller is responsible for passing a transient law; a recurrent law is
// not detectable and simply yields a drifting estimate.
GammaEstimate estimate_gamma(const WalkModel& model, std::int64_t horizon, std::int64_t samples,
                             RngStream stream, int threads = 0);

GammaConvergence estimate_gamma_with_doubling(const WalkModel& model, std::int64_t horizon,
                                              std::int64_t samples, RngStream stream,
                                              int threads = 0);

// ---------------------------------------------------------------------------
// Expected renewal local times
// ---------------------------------------------------------------------------

// Exact E N_n(i) = sum_{k <= min(n,i)} P(S_k = i) for 1 <= i <= n*max(support).
// For i <= n this is the renewal mass u_i (u_0 = 1, u_i = sum_j p_j u_{i-j});
// beyond n the k <= n truncation is applied through the correction
//   E N_n(i) = sum_j p_j E~ N_n(i-j) - P(S_{n+1} = i),
// with the S_{n+1} row computed in closed (log-binomial) form for two-point
// supports and by banded convolution otherwise. Throws ResourceError when the
// table or the convolution exceeds the budget; use
// expected_localtime_monte_carlo as the fallback.
ExpectedLocalTimeTable expected_localtime_renewal(const RenewalFinite& law, std::int64_t n);

// Monte Carlo fallback: empirical visit frequencies over `samples` paths
// drawn from `stream`. Use a sample set independent of any experiment that
// consumes the table, otherwise the centering is biased toward those paths.
ExpectedLocalTimeTable expected_localtime_monte_carlo(const RenewalFinite& law, std::int64_t n,
                                                      std::int64_t samples, RngStream stream,
                                                      int threads = 0);

// ---------------------------------------------------------------------------
// Planar subsequence schedule
// ---------------------------------------------------------------------------

// t_m = floor(exp(m^(1+nu))). Throws ResourceError when the value exceeds
// `horizon_budget` (the schedule explodes; only small m are usable at desk
// scale).
std::int64_t subsequence_t(int m, double nu, std::int64_t horizon_budget = 10'000'000);

// ---------------------------------------------------------------------------
// Variance targets (theorem constants bundled with their ingredients)
// ---------------------------------------------------------------------------

struct VarianceTarget {
  Theorem theorem = Theorem::kRenewal;
  double value = 0;
  std::optional<double> interarrival_mean;     // renewal
  std::optional<SquareMatrix> sigma;           // planar
  std::optional<double> gamma;                 // transient

  std::string to_json() const;
};

VarianceTarget variance_target_renewal(const RenewalFinite& law);
VarianceTarget variance_target_planar(const IncrementLaw& law);
VarianceTarget variance_target_transient(double gamma_hat);

}  // namespace rwrs
