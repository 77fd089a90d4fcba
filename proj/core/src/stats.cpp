#include "rwrs/stats.hpp"

#include <algorithm>
#include <cmath>

#include "rwrs/errors.hpp"

namespace rwrs {

double normal_cdf(double x, double variance) {
  if (!(variance > 0)) throw DomainError("normal_cdf: variance must be positive");
  return 0.5 * std::erfc(-x / std::sqrt(2.0 * variance));
}

double ks_series_pvalue(double lambda) {
  if (lambda <= 0) return 1.0;
  // 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2); converges in a handful of
  // terms away from 0.
  double sum = 0;
  double sign = 1;
  for (int j = 1; j <= 100; ++j) {
    double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_statistic(std::span<const double> samples, double variance) {
  if (samples.empty()) throw UsageError("ks_statistic: empty sample");
  if (!(variance > 0)) throw DomainError("ks_statistic: variance must be positive");

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());

  KsResult r;
  if (sorted.front() == sorted.back()) {
    r.statistic = 1.0;
    r.p_value = 0.0;
    r.degenerate = true;
    return r;
  }

  const double n = static_cast<double>(sorted.size());
  double d = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    double f = normal_cdf(sorted[i], variance);
    double lo = f - static_cast<double>(i) / n;
    double hi = static_cast<double>(i + 1) / n - f;
    d = std::max({d, lo, hi});
  }
  r.statistic = d;
  double sqrt_n = std::sqrt(n);
  double lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
  r.p_value = ks_series_pvalue(lambda);
  return r;
}

double gaussian_moment(int order, double variance) {
  if (order < 0) throw UsageError("gaussian_moment: negative order");
  if (order % 2 == 1) return 0.0;
  double value = 1.0;
  for (int k = order - 1; k >= 1; k -= 2) value *= static_cast<double>(k);
  return value * std::pow(variance, order / 2.0);
}

std::vector<MomentEstimate> empirical_moments(std::span<const double> samples, int max_order,
                                              double target_variance) {
  if (samples.empty()) throw UsageError("empirical_moments: empty sample");
  if (max_order < 1 || max_order > 8) {
    throw UsageError("empirical_moments: order must lie in [1,8] (higher moments are too noisy)");
  }
  const double n = static_cast<double>(samples.size());
  std::vector<MomentEstimate> out;
  out.reserve(static_cast<std::size_t>(max_order));
  for (int k = 1; k <= max_order; ++k) {
    double sum = 0, comp = 0;
    for (double x : samples) {
      double y = std::pow(x, k) - comp;
      double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    double mean = sum / n;
    // Jackknife SE of a sample mean reduces to sqrt(sum (y - mean)^2 / (n(n-1))).
    double ss = 0;
    for (double x : samples) {
      double dev = std::pow(x, k) - mean;
      ss += dev * dev;
    }
    MomentEstimate e;
    e.order = k;
    e.value = mean;
    e.std_error = samples.size() > 1 ? std::sqrt(ss / (n * (n - 1.0))) : 0.0;
    e.gaussian_target = gaussian_moment(k, target_variance);
    out.push_back(e);
  }
  return out;
}

double sample_mean(std::span<const double> xs) {
  if (xs.empty()) throw UsageError("sample_mean: empty sample");
  double sum = 0, comp = 0;
  for (double x : xs) {
    double y = x - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw UsageError("sample_variance: need at least two samples");
  double mean = sample_mean(xs);
  double ss = 0, comp = 0;
  for (double x : xs) {
    double y = (x - mean) * (x - mean) - comp;
    double t = ss + y;
    comp = (t - ss) - y;
    ss = t;
  }
  return ss / static_cast<double>(xs.size() - 1);
}

double sample_correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw UsageError("sample_correlation: mismatched or too-short samples");
  }
  double mx = sample_mean(xs), my = sample_mean(ys);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double regression_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw UsageError("regression_slope: mismatched or too-short samples");
  }
  double mx = sample_mean(xs), my = sample_mean(ys);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0) throw DomainError("regression_slope: x values are constant");
  return sxy / sxx;
}

}  // namespace rwrs
