#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rwrs/errors.hpp"
#include "rwrs/limits.hpp"
#include "rwrs/occupation.hpp"

using namespace rwrs;

namespace {

// Independent oracle: full distribution DP over (step, site), summing
// P(S_k = i) for k <= n. Quadratic, test-scale only.
std::vector<double> brute_expected_localtime(const RenewalFinite& law, std::int64_t n) {
  std::int64_t smax = *std::max_element(law.support.begin(), law.support.end());
  std::vector<double> expected(static_cast<std::size_t>(n * smax), 0.0);
  std::vector<double> dist(static_cast<std::size_t>(n * smax + 1), 0.0);
  dist[0] = 1.0;
  for (std::int64_t k = 1; k <= n; ++k) {
    std::vector<double> next(dist.size(), 0.0);
    for (std::size_t i = 0; i < dist.size(); ++i) {
      if (dist[i] == 0.0) continue;
      for (std::size_t j = 0; j < law.support.size(); ++j) {
        std::size_t to = i + static_cast<std::size_t>(law.support[j]);
        if (to < next.size()) next[to] += law.probs[j] * dist[i];
      }
    }
    dist.swap(next);
    for (std::size_t i = 1; i < dist.size(); ++i) {
      expected[i - 1] += dist[i];
    }
  }
  return expected;
}

}  // namespace

TEST_SUITE_BEGIN("limits");

TEST_CASE("renewal variance formula") {
  CHECK(variance_renewal(1.0) == doctest::Approx(0.0));
  CHECK(variance_renewal(1.5) == doctest::Approx(1.0 / 3.0));
  CHECK(variance_renewal(2.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(variance_renewal(0.9), DomainError);
}

TEST_CASE("planar variance formula") {
  CHECK(variance_planar(SquareMatrix::identity(2)) == doctest::Approx(1.0 / (2.0 * M_PI)));
  CHECK(variance_planar(SquareMatrix::identity(2, 0.5)) == doctest::Approx(1.0 / M_PI));
  SquareMatrix diag = SquareMatrix::identity(2);
  diag.at(1, 1) = 4.0;
  CHECK(variance_planar(diag) == doctest::Approx(1.0 / (4.0 * M_PI)));

  SquareMatrix singular;
  singular.dim = 2;
  singular.at(0, 0) = 1.0;
  CHECK_THROWS_AS(variance_planar(singular), DomainError);
  CHECK_THROWS_AS(variance_planar(SquareMatrix::identity(3)), DomainError);
}

TEST_CASE("transient variance: closed form, series, and domain") {
  CHECK(variance_transient(1.0) == doctest::Approx(1.0));
  CHECK(variance_transient(0.5) == doctest::Approx(3.0));
  CHECK(variance_transient(0.6595) == doctest::Approx(2.0326005).epsilon(1e-5));
  CHECK_THROWS_AS(variance_transient(0.0), DomainError);
  CHECK_THROWS_AS(variance_transient(1.1), DomainError);

  // independent truncated series, 1e-12 relative agreement
  for (double gamma : {0.1, 0.25, 0.5, 0.75, 0.99}) {
    double series = 0, weight = 1;
    for (std::int64_t k = 1; k < 100000; ++k) {
      double term = static_cast<double>(k) * static_cast<double>(k) * weight;
      series += term;
      weight *= 1.0 - gamma;
      if (term < 1e-18) break;
    }
    series *= gamma * gamma;
    CHECK(variance_transient(gamma) == doctest::Approx(series).epsilon(1e-12));
  }
}

TEST_CASE("renewal walks have escape probability exactly one") {
  WalkModel model{RenewalFinite{{1, 2}, {0.5, 0.5}}};
  GammaEstimate e = estimate_gamma(model, 1000000, 100000, RngStream(1));
  CHECK(e.gamma_hat == 1.0);
  CHECK(e.std_error == 0.0);
  GammaConvergence c = estimate_gamma_with_doubling(model, 1000, 1000, RngStream(1));
  CHECK(c.converged);
  CHECK(c.delta == 0.0);
}

// Desk-scale check against the known escape probability 0.6595 of the
// simple walk on Z^3; the survival bias at T = 2e4 is ~0.005.
TEST_CASE("gamma estimate for the simple walk on Z3") {
  WalkModel model{SimpleWalk{3}};
  GammaEstimate e = estimate_gamma(model, 20000, 20000, RngStream(2024), 2);
  CHECK(e.gamma_hat > 0.645);
  CHECK(e.gamma_hat < 0.685);
  CHECK(e.std_error == doctest::Approx(std::sqrt(e.gamma_hat * (1 - e.gamma_hat) / 20000)));
}

TEST_CASE("doubling reuse is nested: the doubled estimate never exceeds the base") {
  WalkModel model{StableTail{1, 0.8}};
  GammaConvergence c = estimate_gamma_with_doubling(model, 5000, 5000, RngStream(7), 2);
  CHECK(c.delta >= 0.0);
  CHECK(c.at_doubled.gamma_hat <= c.at_horizon.gamma_hat);
  CHECK(c.at_horizon.horizon == 5000);
  CHECK(c.at_doubled.horizon == 10000);
}

TEST_CASE("gamma estimates are reproducible and thread-count invariant") {
  WalkModel model{SimpleWalk{3}};
  GammaEstimate e1 = estimate_gamma(model, 2000, 4000, RngStream(5), 1);
  GammaEstimate e4 = estimate_gamma(model, 2000, 4000, RngStream(5), 4);
  CHECK(e1.gamma_hat == e4.gamma_hat);
}

TEST_CASE("expected local times: unit-step law") {
  ExpectedLocalTimeTable t = expected_localtime_renewal(RenewalFinite{{1}, {1.0}}, 20);
  CHECK(t.size() == 20);
  for (std::int64_t i = 1; i <= 20; ++i) CHECK(t.at(i) == doctest::Approx(1.0));
  CHECK(t.at(21) == 0.0);
}

TEST_CASE("expected local times: hand recursion for support {1,2}") {
  RenewalFinite law{{1, 2}, {0.5, 0.5}};
  ExpectedLocalTimeTable t = expected_localtime_renewal(law, 40);
  CHECK(t.at(1) == doctest::Approx(0.5));
  CHECK(t.at(2) == doctest::Approx(0.75));
  CHECK(t.at(3) == doctest::Approx(0.625));
  CHECK(t.at(10) == doctest::Approx(2.0 / 3.0).epsilon(1e-3));
  // renewal theorem: u_i -> 1/m far from the boundary band
  CHECK(t.at(35) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("expected local times match the quadratic DP oracle") {
  for (const RenewalFinite& law :
       {RenewalFinite{{1, 2}, {0.5, 0.5}}, RenewalFinite{{1, 3}, {0.7, 0.3}},
        RenewalFinite{{2, 3}, {0.4, 0.6}}, RenewalFinite{{1, 2, 3}, {0.3, 0.5, 0.2}},
        RenewalFinite{{1, 2, 5}, {0.25, 0.5, 0.25}}}) {
    const std::int64_t n = 200;
    ExpectedLocalTimeTable fast = expected_localtime_renewal(law, n);
    std::vector<double> oracle = brute_expected_localtime(law, n);
    REQUIRE(fast.values.size() == oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      CHECK(fast.values[i] == doctest::Approx(oracle[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("expected local times: totals, ranges, and budget") {
  RenewalFinite law{{1, 2}, {0.5, 0.5}};
  const std::int64_t n = 5000;
  ExpectedLocalTimeTable t = expected_localtime_renewal(law, n);
  long double total = 0;
  for (double v : t.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    total += v;
  }
  CHECK(std::abs(static_cast<double>(total) - static_cast<double>(n)) < 1e-9);

  // band beyond the wide-support convolution budget
  RenewalFinite wide{{1, 2, 3}, {0.3, 0.4, 0.3}};
  CHECK_THROWS_AS(expected_localtime_renewal(wide, 200000), ResourceError);
}

TEST_CASE("Monte Carlo fallback agrees with the exact table to 4 sigma") {
  RenewalFinite law{{1, 2}, {0.5, 0.5}};
  const std::int64_t n = 50;
  const std::int64_t samples = 20000;
  ExpectedLocalTimeTable exact = expected_localtime_renewal(law, n);
  ExpectedLocalTimeTable mc = expected_localtime_monte_carlo(law, n, samples, RngStream(3), 2);
  REQUIRE(mc.size() == exact.size());
  for (std::int64_t i = 1; i <= exact.size(); ++i) {
    double u = exact.at(i);
    double se = std::sqrt(std::max(u * (1 - u), 1e-12) / static_cast<double>(samples));
    CHECK(std::abs(mc.at(i) - u) <= 4.0 * se + 1e-12);
  }
}

// Prop-level identity at the expectation: sum_i (E N_n(i))^2 = E x E Q_n.
TEST_CASE("squared expected local times equal the mean mutual intersection") {
  RenewalFinite law{{1, 2}, {0.5, 0.5}};
  WalkModel model{IncrementLaw(law)};
  const std::int64_t n = 200;
  ExpectedLocalTimeTable t = expected_localtime_renewal(law, n);
  double dp_value = 0;
  for (double v : t.values) dp_value += v * v;

  const int pairs = 2000;
  RngStream base(888);
  std::vector<double> qs(pairs);
  for (int p = 0; p < pairs; ++p) {
    OccupationTable t1 = accumulate_walk(model, n, base.child(static_cast<std::uint64_t>(2 * p)));
    OccupationTable t2 =
        accumulate_walk(model, n, base.child(static_cast<std::uint64_t>(2 * p + 1)));
    qs[static_cast<std::size_t>(p)] = u128_to_double(mutual_intersection(t1, t2, 1, 1));
  }
  double mean = 0;
  for (double q : qs) mean += q;
  mean /= pairs;
  double var = 0;
  for (double q : qs) var += (q - mean) * (q - mean);
  var /= (pairs - 1);
  double se = std::sqrt(var / pairs);
  CHECK(std::abs(mean - dp_value) < 4.0 * se);
}

TEST_CASE("subsequence schedule values and budget") {
  CHECK(subsequence_t(1, 1.0) == 2);
  CHECK(subsequence_t(2, 1.0) == 54);
  CHECK(subsequence_t(3, 1.0) == 8103);
  CHECK(subsequence_t(2, 0.1) == 8);
  CHECK(subsequence_t(4, 1.0) == 8886110);  // e^16 still fits the default budget
  CHECK_THROWS_AS(subsequence_t(5, 1.0), ResourceError);
  CHECK_THROWS_AS(subsequence_t(3, 2.0), ResourceError);
  CHECK_THROWS_AS(subsequence_t(0, 1.0), UsageError);
  CHECK_THROWS_AS(subsequence_t(2, -1.0), UsageError);
}

TEST_CASE("variance targets bundle their ingredients") {
  VarianceTarget r = variance_target_renewal(RenewalFinite{{1, 2}, {0.5, 0.5}});
  CHECK(r.value == doctest::Approx(1.0 / 3.0));
  CHECK(*r.interarrival_mean == doctest::Approx(1.5));
  CHECK(r.to_json().find("renewal") != std::string::npos);

  VarianceTarget p = variance_target_planar(SimpleWalk{2});
  CHECK(p.value == doctest::Approx(1.0 / M_PI));

  VarianceTarget g = variance_target_transient(0.5);
  CHECK(g.value == doctest::Approx(3.0));
  CHECK(*g.gamma == doctest::Approx(0.5));
}

TEST_SUITE_END();
