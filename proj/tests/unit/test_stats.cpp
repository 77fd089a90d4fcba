#include <doctest.h>

#include <cmath>
#include <vector>

#include "rwrs/errors.hpp"
#include "rwrs/rng.hpp"
#include "rwrs/stats.hpp"

using namespace rwrs;

TEST_SUITE_BEGIN("stats");

TEST_CASE("normal cdf basics") {
  CHECK(normal_cdf(0.0, 1.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.96, 1.0) == doctest::Approx(0.975).epsilon(1e-3));
  CHECK(normal_cdf(-1.0, 0.25) == doctest::Approx(normal_cdf(-2.0, 1.0)));
  CHECK_THROWS_AS(normal_cdf(0.0, 0.0), DomainError);
}

// Self-consistency oracle: samples drawn from the library's own normal
// generator tested against the true variance should rarely produce small
// p-values (p > 0.001 in at least 99 of 100 repetitions).
TEST_CASE("ks statistic accepts its own normal generator") {
  RngStream base(4711);
  int ok = 0;
  for (int rep = 0; rep < 100; ++rep) {
    RngStream g = base.child(static_cast<std::uint64_t>(rep));
    std::vector<double> samples(10000);
    for (double& s : samples) s = g.next_normal();
    KsResult r = ks_statistic(samples, 1.0);
    CHECK_FALSE(r.degenerate);
    if (r.p_value > 0.001) ++ok;
  }
  CHECK(ok >= 99);
}

// Power check: N(0,1) samples tested against variance 4 must be rejected
// decisively at M = 1e4.
TEST_CASE("ks statistic rejects a wrong variance") {
  RngStream g(555);
  std::vector<double> samples(10000);
  for (double& s : samples) s = g.next_normal();
  KsResult r = ks_statistic(samples, 4.0);
  CHECK(r.p_value < 1e-6);
}

TEST_CASE("degenerate samples are flagged with statistic one") {
  std::vector<double> constant(100, 2.5);
  KsResult r = ks_statistic(constant, 1.0);
  CHECK(r.degenerate);
  CHECK(r.statistic == 1.0);
  CHECK(r.p_value == 0.0);

  CHECK_THROWS_AS(ks_statistic(std::vector<double>{}, 1.0), UsageError);
  CHECK_THROWS_AS(ks_statistic(std::vector<double>{1.0, 2.0}, -1.0), DomainError);
}

TEST_CASE("gaussian moments: double factorial times sigma powers") {
  CHECK(gaussian_moment(1, 1.0) == 0.0);
  CHECK(gaussian_moment(2, 1.0) == doctest::Approx(1.0));
  CHECK(gaussian_moment(4, 1.0) == doctest::Approx(3.0));
  CHECK(gaussian_moment(6, 1.0) == doctest::Approx(15.0));
  CHECK(gaussian_moment(8, 1.0) == doctest::Approx(105.0));
  CHECK(gaussian_moment(4, 1.0 / 3.0) == doctest::Approx(1.0 / 3.0));
  CHECK(gaussian_moment(2, 0.25) == doctest::Approx(0.25));
}

TEST_CASE("empirical moments on a two-point sample") {
  std::vector<double> s{-1.0, 1.0};
  std::vector<MomentEstimate> ms = empirical_moments(s, 4, 1.0);
  CHECK(ms[0].value == doctest::Approx(0.0));  // m(1)
  CHECK(ms[1].value == doctest::Approx(1.0));  // m(2)
  CHECK(ms[2].value == doctest::Approx(0.0));  // m(3)
  CHECK(ms[3].value == doctest::Approx(1.0));  // m(4)
  CHECK(ms[3].gaussian_target == doctest::Approx(3.0));
  CHECK_THROWS_AS(empirical_moments(s, 9, 1.0), UsageError);
}

TEST_CASE("fourth moment of exact normals is 3 within 4 jackknife errors") {
  RngStream g(99);
  std::vector<double> samples(100000);
  for (double& s : samples) s = g.next_normal();
  std::vector<MomentEstimate> ms = empirical_moments(samples, 4, 1.0);
  CHECK(std::abs(ms[3].value - 3.0) < 4.0 * ms[3].std_error);
  // jackknife SE of the mean coincides with the classical one
  double check = std::sqrt(sample_variance(samples) / static_cast<double>(samples.size()));
  CHECK(ms[0].std_error == doctest::Approx(check).epsilon(1e-9));
}

TEST_CASE("mean, variance, correlation, slope") {
  std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  std::vector<double> ys{2.0, 4.0, 6.0, 8.0};
  CHECK(sample_mean(xs) == doctest::Approx(2.5));
  CHECK(sample_variance(xs) == doctest::Approx(5.0 / 3.0));
  CHECK(sample_correlation(xs, ys) == doctest::Approx(1.0));
  CHECK(regression_slope(xs, ys) == doctest::Approx(2.0));

  std::vector<double> anti{4.0, 3.0, 2.0, 1.0};
  CHECK(sample_correlation(xs, anti) == doctest::Approx(-1.0));

  std::vector<double> flat{1.0, 1.0, 1.0, 1.0};
  CHECK_THROWS_AS(regression_slope(flat, ys), DomainError);
}

TEST_SUITE_END();
