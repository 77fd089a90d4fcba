#include "rwrs/limits.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <json.hpp>

#include "rwrs/errors.hpp"
#include "rwrs/parallel.hpp"

namespace rwrs {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kPi = 3.14159265358979323846264338;

ordered_json matrix_json(const SquareMatrix& m) {
  ordered_json rows = ordered_json::array();
  for (int i = 0; i < m.dim; ++i) {
    ordered_json row = ordered_json::array();
    for (int j = 0; j < m.dim; ++j) row.push_back(m.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// Variances
// ---------------------------------------------------------------------------

double variance_renewal(double m) {
  if (m < 1.0) {
    throw DomainError("variance_renewal: interarrival mean " + std::to_string(m) +
                      " below 1 is impossible for positive integer steps");
  }
  return 1.0 - 1.0 / m;
}

double variance_planar(const SquareMatrix& sigma) {
  if (sigma.dim != 2) throw DomainError("variance_planar: covariance must be 2x2");
  if (std::abs(sigma.at(0, 1) - sigma.at(1, 0)) > 1e-12) {
    throw DomainError("variance_planar: covariance must be symmetric");
  }
  double det = sigma.determinant();
  if (!(sigma.at(0, 0) > 0) || !(det > 0)) {
    throw DomainError("variance_planar: covariance must be positive definite");
  }
  return 1.0 / (2.0 * kPi * std::sqrt(det));
}

double variance_transient(double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw DomainError("variance_transient: gamma=" + std::to_string(gamma) +
                      " outside (0,1]");
  }
  const double closed = (2.0 - gamma) / gamma;

  // Truncated series gamma^2 sum k^2 (1-gamma)^(k-1); both routes must agree.
  const double r = 1.0 - gamma;
  double series = 0;
  double weight = 1.0;  // (1-gamma)^(k-1)
  for (std::int64_t k = 1;; ++k) {
    double term = static_cast<double>(k) * static_cast<double>(k) * weight;
    series += term;
    if (term < 1e-15 && k > 1) break;
    weight *= r;
    if (weight == 0.0) break;
  }
  series *= gamma * gamma;

  if (std::abs(series - closed) > 1e-12 * closed) {
    throw IntegrityError("variance_transient: series and closed form disagree (" +
                         std::to_string(series) + " vs " + std::to_string(closed) + ")");
  }
  return closed;
}

// ---------------------------------------------------------------------------
// Gamma estimation
// ---------------------------------------------------------------------------

namespace {

GammaEstimate make_estimate(std::int64_t alive, std::int64_t samples, std::int64_t horizon) {
  GammaEstimate e;
  e.gamma_hat = static_cast<double>(alive) / static_cast<double>(samples);
  e.std_error = std::sqrt(std::max(0.0, e.gamma_hat * (1.0 - e.gamma_hat)) /
                          static_cast<double>(samples));
  e.horizon = horizon;
  e.samples = samples;
  return e;
}

// Survival times capped at `horizon`: out[i] = 1 if path i avoided the origin
// through `horizon` steps, else 0. Optionally also records survival at the
// half horizon (for the doubling check with nested reuse).
void survival_run(const WalkModel& model, std::int64_t horizon, std::int64_t samples,
                  RngStream stream, int threads, std::vector<std::uint8_t>& alive_full,
                  std::int64_t half_horizon, std::vector<std::uint8_t>* alive_half) {
  alive_full.assign(static_cast<std::size_t>(samples), 0);
  if (alive_half) alive_half->assign(static_cast<std::size_t>(samples), 0);
  const int dim = model.dim();
  model.with_kernel([&](const auto& kernel) {
    parallel_for(
        samples, threads,
        [&](std::int64_t i) {
          RngStream g = stream.child(static_cast<std::uint64_t>(i));
          Site pos{};
          std::int64_t died_at = 0;  // 0 = survived
          for (std::int64_t k = 1; k <= horizon; ++k) {
            kernel.advance(g, pos);
            bool zero = true;
            for (int d = 0; d < dim; ++d) {
              if (pos[d] != 0) {
                zero = false;
                break;
              }
            }
            if (zero) {
              died_at = k;
              break;
            }
          }
          alive_full[static_cast<std::size_t>(i)] = (died_at == 0) ? 1 : 0;
          if (alive_half) {
            (*alive_half)[static_cast<std::size_t>(i)] =
                (died_at == 0 || died_at > half_horizon) ? 1 : 0;
          }
        },
        /*grain=*/16);
  });
}

}  // namespace

GammaEstimate estimate_gamma(const WalkModel& model, std::int64_t horizon, std::int64_t samples,
                             RngStream stream, int threads) {
  if (horizon < 1 || samples < 1) throw UsageError("estimate_gamma: horizon and samples must be >= 1");
  if (model.renewal()) {
    // Strictly increasing walk: survival is certain, no simulation needed.
    GammaEstimate e;
    e.gamma_hat = 1.0;
    e.std_error = 0.0;
    e.horizon = horizon;
    e.samples = samples;
    return e;
  }
  std::vector<std::uint8_t> alive;
  survival_run(model, horizon, samples, stream, threads, alive, 0, nullptr);
  std::int64_t count = 0;
  for (std::uint8_t a : alive) count += a;
  return make_estimate(count, samples, horizon);
}

GammaConvergence estimate_gamma_with_doubling(const WalkModel& model, std::int64_t horizon,
                                              std::int64_t samples, RngStream stream,
                                              int threads) {
  if (horizon < 1 || samples < 1) {
    throw UsageError("estimate_gamma_with_doubling: horizon and samples must be >= 1");
  }
  GammaConvergence c;
  if (model.renewal()) {
    c.at_horizon = estimate_gamma(model, horizon, samples, stream, threads);
    c.at_doubled = estimate_gamma(model, 2 * horizon, samples, stream, threads);
    c.delta = 0.0;
    c.converged = true;
    return c;
  }
  std::vector<std::uint8_t> alive_2t, alive_t;
  survival_run(model, 2 * horizon, samples, stream, threads, alive_2t, horizon, &alive_t);
  std::int64_t n_t = 0, n_2t = 0;
  for (std::size_t i = 0; i < alive_t.size(); ++i) {
    n_t += alive_t[i];
    n_2t += alive_2t[i];
  }
  c.at_horizon = make_estimate(n_t, samples, horizon);
  c.at_doubled = make_estimate(n_2t, samples, 2 * horizon);
  c.delta = c.at_horizon.gamma_hat - c.at_doubled.gamma_hat;
  c.converged = c.delta < 2.0 * c.at_horizon.std_error;
  return c;
}

std::string GammaEstimate::to_json() const {
  ordered_json j;
  j["gamma_hat"] = gamma_hat;
  j["std_error"] = std_error;
  j["horizon"] = horizon;
  j["samples"] = samples;
  return j.dump();
}

std::string GammaConvergence::to_json() const {
  ordered_json j;
  j["at_horizon"] = ordered_json::parse(at_horizon.to_json());
  j["at_doubled"] = ordered_json::parse(at_doubled.to_json());
  j["delta"] = delta;
  j["converged"] = converged;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Expected renewal local times
// ---------------------------------------------------------------------------

namespace {

constexpr std::int64_t kMaxTableEntries = std::int64_t(1) << 26;  // 64M doubles = 512 MB
constexpr std::int64_t kMaxConvolutionHorizon = 20'000;

double log_choose(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n + 1)) - std::lgamma(static_cast<double>(k + 1)) -
         std::lgamma(static_cast<double>(n - k + 1));
}

// Row P(S_m = i) for i in [m*smin, m*smax], two-point support: the number of
// large steps is determined by i, so each entry is a single binomial mass.
std::vector<double> step_sum_row_binomial(const RenewalFinite& law, std::int64_t m) {
  const std::int64_t s1 = std::min(law.support[0], law.support[1]);
  const std::int64_t s2 = std::max(law.support[0], law.support[1]);
  const double p1 = law.support[0] < law.support[1] ? law.probs[0] : law.probs[1];
  const double p2 = 1.0 - p1;
  const std::int64_t d = s2 - s1;
  std::vector<double> row(static_cast<std::size_t>(m * (s2 - s1) + 1), 0.0);
  const double lp1 = std::log(p1), lp2 = std::log(p2);
  for (std::int64_t t = 0; t <= m; ++t) {
    // i = s1*(m-t) + s2*t  ->  offset from m*s1 is t*d
    double logp = log_choose(m, t) + static_cast<double>(m - t) * lp1 +
                  static_cast<double>(t) * lp2;
    row[static_cast<std::size_t>(t * d)] = std::exp(logp);
  }
  return row;
}

// General support: banded convolution, O(m * m * (smax-smin) * r) time.
std::vector<double> step_sum_row_convolution(const RenewalFinite& law, std::int64_t m) {
  const std::int64_t smin = *std::min_element(law.support.begin(), law.support.end());
  const std::int64_t smax = *std::max_element(law.support.begin(), law.support.end());
  const std::size_t width = static_cast<std::size_t>(m * (smax - smin) + 1);
  std::vector<double> cur(width, 0.0), next(width, 0.0);
  cur[0] = 1.0;  // P(S_0 = 0), offset relative to k*smin
  for (std::int64_t k = 1; k <= m; ++k) {
    std::size_t prev_width = static_cast<std::size_t>((k - 1) * (smax - smin) + 1);
    std::size_t cur_width = static_cast<std::size_t>(k * (smax - smin) + 1);
    std::fill(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(cur_width), 0.0);
    for (std::size_t j = 0; j < law.support.size(); ++j) {
      // step s shifts the offset by (s - smin) relative to the new base k*smin
      std::size_t shift = static_cast<std::size_t>(law.support[j] - smin);
      double p = law.probs[j];
      for (std::size_t o = 0; o < prev_width; ++o) {
        next[o + shift] += p * cur[o];
      }
    }
    std::swap(cur, next);
  }
  cur.resize(static_cast<std::size_t>(m * (smax - smin) + 1));
  return cur;  // cur[o] = P(S_m = m*smin + o)
}

}  // namespace

ExpectedLocalTimeTable expected_localtime_renewal(const RenewalFinite& law, std::int64_t n) {
  if (n < 1) throw UsageError("expected_localtime_renewal: n must be >= 1");
  WalkModel check{IncrementLaw(law)};  // structural validation
  const std::int64_t smax = *std::max_element(law.support.begin(), law.support.end());
  const std::int64_t smin = *std::min_element(law.support.begin(), law.support.end());
  const std::int64_t size = n * smax;
  if (size > kMaxTableEntries) {
    throw ResourceError(
        "expected_localtime_renewal: table of " + std::to_string(size) +
        " entries exceeds the memory budget; use the Monte Carlo fallback "
        "(expected_localtime_monte_carlo)");
  }

  ExpectedLocalTimeTable table;
  table.horizon = n;
  table.values.assign(static_cast<std::size_t>(size), 0.0);

  // Renewal masses u_i for i <= n: within n steps the walk has passed site i
  // for sure, so the truncation k <= n is not binding. Long-double recursion
  // keeps sum_i E N_n(i) = n to well under 1e-9 at desk horizons.
  std::vector<long double> u(static_cast<std::size_t>(n + 1), 0.0L);
  u[0] = 1.0L;
  for (std::int64_t i = 1; i <= n; ++i) {
    long double acc = 0;
    for (std::size_t j = 0; j < law.support.size(); ++j) {
      std::int64_t prev = i - law.support[j];
      if (prev >= 0) acc += static_cast<long double>(law.probs[j]) * u[static_cast<std::size_t>(prev)];
    }
    u[static_cast<std::size_t>(i)] = acc;
    table.values[static_cast<std::size_t>(i - 1)] = static_cast<double>(acc);
  }
  if (size == n) return table;  // deterministic unit-step law has no band

  // Band i in (n, n*smax]: same recursion with the correction -P(S_{n+1} = i).
  std::vector<double> row;  // row[o] = P(S_{n+1} = (n+1)*smin + o)
  if (law.support.size() == 2) {
    row = step_sum_row_binomial(law, n + 1);
  } else {
    if (n > kMaxConvolutionHorizon) {
      throw ResourceError(
          "expected_localtime_renewal: supports with more than two points use a "
          "banded convolution, budgeted to n <= " +
          std::to_string(kMaxConvolutionHorizon) +
          "; use the Monte Carlo fallback (expected_localtime_monte_carlo)");
    }
    row = step_sum_row_convolution(law, n + 1);
  }
  auto row_at = [&](std::int64_t i) -> double {
    std::int64_t o = i - (n + 1) * smin;
    if (o < 0 || o >= static_cast<std::int64_t>(row.size())) return 0.0;
    return row[static_cast<std::size_t>(o)];
  };
  auto value_at = [&](std::int64_t i) -> double {
    if (i == 0) return 1.0;
    if (i < 0) return 0.0;
    return table.values[static_cast<std::size_t>(i - 1)];
  };
  for (std::int64_t i = n + 1; i <= size; ++i) {
    double acc = 0;
    for (std::size_t j = 0; j < law.support.size(); ++j) {
      acc += law.probs[j] * value_at(i - law.support[j]);
    }
    acc -= row_at(i);
    table.values[static_cast<std::size_t>(i - 1)] = std::clamp(acc, 0.0, 1.0);
  }
  return table;
}

ExpectedLocalTimeTable expected_localtime_monte_carlo(const RenewalFinite& law, std::int64_t n,
                                                      std::int64_t samples, RngStream stream,
                                                      int threads) {
  if (samples < 1) throw UsageError("expected_localtime_monte_carlo: samples must be >= 1");
  WalkModel model{IncrementLaw(law)};
  const std::int64_t smax = *std::max_element(law.support.begin(), law.support.end());
  const std::int64_t size = n * smax;
  if (size > kMaxTableEntries) {
    throw ResourceError("expected_localtime_monte_carlo: table exceeds the memory budget");
  }

  const int t = resolve_thread_count(threads);
  std::vector<std::vector<std::int64_t>> partial(
      static_cast<std::size_t>(t), std::vector<std::int64_t>(static_cast<std::size_t>(size), 0));
  // Deterministic partition of samples by thread slot; merge order is fixed.
  parallel_for(t, t, [&](std::int64_t slot) {
    auto& hits = partial[static_cast<std::size_t>(slot)];
    model.with_kernel([&](const auto& kernel) {
      for (std::int64_t s = slot; s < samples; s += t) {
        RngStream g = stream.child(static_cast<std::uint64_t>(s));
        Site pos{};
        for (std::int64_t k = 0; k < n; ++k) {
          kernel.advance(g, pos);
          ++hits[static_cast<std::size_t>(pos[0] - 1)];
        }
      }
    });
  });

  ExpectedLocalTimeTable table;
  table.horizon = n;
  table.values.assign(static_cast<std::size_t>(size), 0.0);
  for (std::int64_t i = 0; i < size; ++i) {
    std::int64_t total = 0;
    for (int slot = 0; slot < t; ++slot) total += partial[static_cast<std::size_t>(slot)][static_cast<std::size_t>(i)];
    table.values[static_cast<std::size_t>(i)] =
        static_cast<double>(total) / static_cast<double>(samples);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Subsequence schedule
// ---------------------------------------------------------------------------

std::int64_t subsequence_t(int m, double nu, std::int64_t horizon_budget) {
  if (m < 1) throw UsageError("subsequence_t: m must be >= 1");
  if (!(nu > 0)) throw UsageError("subsequence_t: nu must be positive");
  double exponent = std::pow(static_cast<double>(m), 1.0 + nu);
  if (exponent > std::log(static_cast<double>(horizon_budget))) {
    throw ResourceError("subsequence_t: exp(" + std::to_string(exponent) +
                        ") exceeds the horizon budget " + std::to_string(horizon_budget));
  }
  return static_cast<std::int64_t>(std::floor(std::exp(exponent)));
}

// ---------------------------------------------------------------------------
// Variance targets
// ---------------------------------------------------------------------------

VarianceTarget variance_target_renewal(const RenewalFinite& law) {
  VarianceTarget t;
  t.theorem = Theorem::kRenewal;
  t.interarrival_mean = law.mean();
  t.value = variance_renewal(*t.interarrival_mean);
  return t;
}

VarianceTarget variance_target_planar(const IncrementLaw& law) {
  VarianceTarget t;
  t.theorem = Theorem::kPlanar;
  t.sigma = covariance(law);
  t.value = variance_planar(*t.sigma);
  return t;
}

VarianceTarget variance_target_transient(double gamma_hat) {
  VarianceTarget t;
  t.theorem = Theorem::kTransient;
  t.gamma = gamma_hat;
  t.value = variance_transient(gamma_hat);
  return t;
}

std::string VarianceTarget::to_json() const {
  ordered_json j;
  j["theorem"] = to_string(theorem);
  j["value"] = value;
  if (interarrival_mean) j["interarrival_mean"] = *interarrival_mean;
  if (sigma) j["sigma"] = matrix_json(*sigma);
  if (gamma) j["gamma"] = *gamma;
  return j.dump();
}

}  // namespace rwrs
