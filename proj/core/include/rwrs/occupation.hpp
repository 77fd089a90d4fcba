#pragma once

#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rwrs/lattice.hpp"
#include "rwrs/rng.hpp"
#include "rwrs/site_count_map.hpp"
#include "rwrs/walks.hpp"
#include "rwrs/wide_int.hpp"

namespace rwrs {

// ---------------------------------------------------------------------------
// Occupation tables (local times)
// ---------------------------------------------------------------------------

// Sparse local times of one path: site -> N_n(x), number of visits among
// times 1..n. S_0 = 0 is not counted; an off-by-one here would shift every
// RWRS sum by the scenery value at the origin.
struct OccupationTable {
  int dim = 1;
  std::int64_t horizon = 0;
  SiteCountMap counts;
};

OccupationTable accumulate_positions(int dim, std::span<const Site> positions);
OccupationTable accumulate_walk(const WalkModel& model, std::int64_t n, RngStream stream);

// Expected local times E N_n(i) of a renewal walk on sites 1..size().
// Values lie in [0,1] since renewal local times are 0/1.
struct ExpectedLocalTimeTable {
  std::int64_t horizon = 0;
  std::vector<double> values;  // values[i-1] = E N_n(i)

  std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
  double at(std::int64_t site) const {
    return (site >= 1 && site <= size()) ? values[static_cast<std::size_t>(site - 1)] : 0.0;
  }
};

// ---------------------------------------------------------------------------
// Intersection functionals
// ---------------------------------------------------------------------------

// I_n^[p] = sum_x N_n(x)^p, p >= 2. Overflow of the 128-bit accumulator
// throws IntegrityError (p is capped at 8 by contract).
u128 self_intersection(const OccupationTable& tab, int p);

// Q_n^[p,q] = sum_x N1(x)^p N2(x)^q, p,q >= 1. Iterates the smaller table.
u128 mutual_intersection(const OccupationTable& a, const OccupationTable& b, int p, int q);

// sum_x prod_j N^(j)(x) over k replicas; for renewal replicas this equals
// the size of the intersection of their ranges.
u128 product_intersection(std::span<const OccupationTable* const> tables);

// J_n^[p] = sum_i (N_n(i) - E N_n(i))^p over the union of supports: sites the
// path never visited still contribute (-E N_n(i))^p. Renewal only (dim 1,
// sites >= 1); a visited site outside the expected table is a coverage gap.
double recentered_moment(const OccupationTable& tab, const ExpectedLocalTimeTable& expected,
                         int p);

// sum_i (N1(i) - E)^k (N2(i) - E)^l, the cross term controlled by
// Cauchy-Schwarz against J^[2k] and J^[2l].
double recentered_cross_moment(const OccupationTable& a, const OccupationTable& b,
                               const ExpectedLocalTimeTable& expected, int k, int l);

// ---------------------------------------------------------------------------
// RWRS sums
// ---------------------------------------------------------------------------

template <class F>
concept ScalarSiteField = requires(const F& f, std::span<const std::int64_t> s) {
  { f.eval(s) } -> std::convertible_to<double>;
  { f.dim } -> std::convertible_to<int>;
};

// Z_n = sum_x omega_x N_n(x), evaluated over the sparse support.
template <ScalarSiteField F>
double rwrs_sum(const OccupationTable& tab, const F& field) {
  if (field.dim != tab.dim) {
    throw UsageError("rwrs_sum: field dimension " + std::to_string(field.dim) +
                     " does not match table dimension " + std::to_string(tab.dim));
  }
  double z = 0;
  tab.counts.for_each([&](PackedSite key, std::int64_t count) {
    Site s = unpack_site(key, tab.dim);
    z += field.eval(std::span<const std::int64_t>(s.data(), static_cast<std::size_t>(tab.dim))) *
         static_cast<double>(count);
  });
  return z;
}

// Z_n computed along the path, sum_{k<=n} omega_{S_k}; algebraically equal to
// the table form.
template <ScalarSiteField F>
double rwrs_sum_streaming(const WalkModel& model, std::int64_t n, const F& field,
                          RngStream stream) {
  if (field.dim != model.dim()) {
    throw UsageError("rwrs_sum_streaming: field/walk dimension mismatch");
  }
  double z = 0;
  Site pos{};
  model.with_kernel([&](const auto& kernel) {
    for (std::int64_t k = 0; k < n; ++k) {
      kernel.advance(stream, pos);
      z += field.eval(std::span<const std::int64_t>(pos.data(), static_cast<std::size_t>(model.dim())));
    }
  });
  return z;
}

// Prefix sums Z_[n t] at the given time grid (sorted, values in (0,1]).
// Single pass along a fresh path from `stream`.
template <ScalarSiteField F>
std::vector<double> rwrs_partial_sums(const WalkModel& model, std::int64_t n,
                                      std::span<const double> time_grid, const F& field,
                                      RngStream stream) {
  if (field.dim != model.dim()) {
    throw UsageError("rwrs_partial_sums: field/walk dimension mismatch");
  }
  std::vector<std::int64_t> horizons;
  horizons.reserve(time_grid.size());
  double prev = 0;
  for (double t : time_grid) {
    if (!(t > 0.0 && t <= 1.0)) throw UsageError("time grid values must lie in (0,1]");
    if (t < prev) throw UsageError("time grid must be sorted ascending");
    prev = t;
    horizons.push_back(static_cast<std::int64_t>(static_cast<double>(n) * t));
  }

  std::vector<double> out(time_grid.size(), 0.0);
  double z = 0;
  Site pos{};
  std::size_t next = 0;
  while (next < horizons.size() && horizons[next] == 0) ++next;
  model.with_kernel([&](const auto& kernel) {
    for (std::int64_t k = 1; k <= n && next < horizons.size(); ++k) {
      kernel.advance(stream, pos);
      z += field.eval(std::span<const std::int64_t>(pos.data(), static_cast<std::size_t>(model.dim())));
      while (next < horizons.size() && horizons[next] == k) {
        out[next] = z;
        ++next;
      }
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Incremental trackers (horizon grids without re-simulation)
// ---------------------------------------------------------------------------

// I_k^[2] of a growing path, updated in O(1) per step.
class SelfIntersectionTracker {
 public:
  explicit SelfIntersectionTracker(int dim, std::size_t expected_sites = 0)
      : dim_(dim), map_(expected_sites) {}

  void add(const Site& position) {
    std::int64_t c = map_.add_and_count(pack_site(position, dim_));
    i2_ += static_cast<u128>(2 * c - 1);
    ++horizon_;
  }

  std::int64_t horizon() const { return horizon_; }
  u128 i2() const { return i2_; }
  const SiteCountMap& counts() const { return map_; }

 private:
  int dim_;
  SiteCountMap map_;
  u128 i2_ = 0;
  std::int64_t horizon_ = 0;
};

// Q_k = sum_x N1_k(x) N2_k(x) for two replicas advanced in lockstep.
class MutualIntersectionTracker {
 public:
  explicit MutualIntersectionTracker(int dim, std::size_t expected_sites = 0)
      : dim_(dim), m1_(expected_sites), m2_(expected_sites) {}

  void add_pair(const Site& pos1, const Site& pos2) {
    PackedSite k1 = pack_site(pos1, dim_);
    PackedSite k2 = pack_site(pos2, dim_);
    q_ += static_cast<u128>(m2_.count(k1)) + static_cast<u128>(m1_.count(k2)) +
          (k1 == k2 ? 1 : 0);
    m1_.add(k1);
    m2_.add(k2);
    ++horizon_;
  }

  std::int64_t horizon() const { return horizon_; }
  u128 q() const { return q_; }
  const SiteCountMap& counts1() const { return m1_; }
  const SiteCountMap& counts2() const { return m2_; }

 private:
  int dim_;
  SiteCountMap m1_, m2_;
  u128 q_ = 0;
  std::int64_t horizon_ = 0;
};

// ---------------------------------------------------------------------------
// Summary record
// ---------------------------------------------------------------------------

struct IntersectionSummary {
  std::int64_t horizon = 0;
  std::vector<std::pair<int, u128>> i_values;                     // p -> I^[p]
  std::vector<std::pair<int, double>> j_values;                   // p -> J^[p]
  std::vector<std::pair<std::pair<int, int>, u128>> q_values;     // (p,q) -> Q^[p,q]
  std::optional<u128> range_intersection;                         // renewal replicas

  std::string to_json() const;
};

}  // namespace rwrs
