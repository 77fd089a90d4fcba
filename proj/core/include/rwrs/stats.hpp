#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rwrs {

double normal_cdf(double x, double variance);

struct KsResult {
  double statistic = 0;
  double p_value = 0;
  bool degenerate = false;  // all samples equal; statistic forced to 1
};

// One-sample Kolmogorov-Smirnov statistic against the centered normal with
// the given variance; asymptotic p-value from the standard alternating
// series with the finite-sample effective-size correction.
KsResult ks_statistic(std::span<const double> samples, double variance);

// Survival function of the asymptotic Kolmogorov distribution.
double ks_series_pvalue(double lambda);

struct MomentEstimate {
  int order = 0;
  double value = 0;
  double std_error = 0;       // jackknife
  double gaussian_target = 0; // (k-1)!! sigma^k for even k, 0 for odd
};

// E Z^k for Z ~ N(0, variance).
double gaussian_moment(int order, double variance);

// Sample moments m(k) = mean(x^k) for k = 1..max_order (max 8), with
// jackknife standard errors and Gaussian targets at `target_variance`.
std::vector<MomentEstimate> empirical_moments(std::span<const double> samples, int max_order,
                                              double target_variance);

double sample_mean(std::span<const double> xs);
// Unbiased (n-1) sample variance.
double sample_variance(std::span<const double> xs);
// Pearson correlation.
double sample_correlation(std::span<const double> xs, std::span<const double> ys);
// Least-squares slope of y on x.
double regression_slope(std::span<const double> xs, std::span<const double> ys);

}  // namespace rwrs
