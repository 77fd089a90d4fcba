#include "rwrs/occupation.hpp"

#include <algorithm>
#include <string>

#include <json.hpp>

#include "rwrs/errors.hpp"

namespace rwrs {

namespace {

using ordered_json = nlohmann::ordered_json;

// count^p with overflow detection; counts are bounded by the horizon, but
// n^p for p up to 8 can exceed 64 bits by a wide margin.
u128 pow_u128(std::int64_t count, int p) {
  u128 result = 1;
  const u128 base = static_cast<u128>(count);
  for (int i = 0; i < p; ++i) {
    u128 next;
    if (mul_overflow(result, base, next)) {
      throw IntegrityError("intersection accumulator overflow: count^" + std::to_string(p) +
                           " exceeds 128 bits");
    }
    result = next;
  }
  return result;
}

void check_power(int p, const char* what) {
  if (p > 8) throw UsageError(std::string(what) + ": exponents above 8 are unsupported");
}

ordered_json u128_json(u128 v) {
  if (fits_u64(v)) return ordered_json(static_cast<std::uint64_t>(v));
  return ordered_json(u128_to_string(v));
}

}  // namespace

OccupationTable accumulate_positions(int dim, std::span<const Site> positions) {
  OccupationTable tab;
  tab.dim = dim;
  tab.horizon = static_cast<std::int64_t>(positions.size());
  tab.counts = SiteCountMap(positions.size());
  for (const Site& s : positions) tab.counts.add(pack_site(s, dim));
  return tab;
}

OccupationTable accumulate_walk(const WalkModel& model, std::int64_t n, RngStream stream) {
  OccupationTable tab;
  tab.dim = model.dim();
  tab.horizon = n;
  tab.counts = SiteCountMap(static_cast<std::size_t>(n));
  Site pos{};
  model.with_kernel([&](const auto& kernel) {
    for (std::int64_t k = 0; k < n; ++k) {
      kernel.advance(stream, pos);
      tab.counts.add(pack_site(pos, tab.dim));
    }
  });
  return tab;
}

u128 self_intersection(const OccupationTable& tab, int p) {
  if (p < 2) throw UsageError("self_intersection: p must be >= 2");
  check_power(p, "self_intersection");
  u128 sum = 0;
  bool overflow = false;
  tab.counts.for_each([&](PackedSite, std::int64_t count) {
    u128 term = pow_u128(count, p);
    u128 next;
    if (add_overflow(sum, term, next)) overflow = true;
    sum = next;
  });
  if (overflow) throw IntegrityError("self_intersection: 128-bit sum overflow");
  return sum;
}

u128 mutual_intersection(const OccupationTable& a, const OccupationTable& b, int p, int q) {
  if (p < 1 || q < 1) throw UsageError("mutual_intersection: p and q must be >= 1");
  check_power(std::max(p, q), "mutual_intersection");
  if (a.dim != b.dim) {
    throw UsageError("mutual_intersection: dimension mismatch (" + std::to_string(a.dim) +
                     " vs " + std::to_string(b.dim) + ")");
  }
  const bool a_smaller = a.counts.distinct() <= b.counts.distinct();
  const OccupationTable& small = a_smaller ? a : b;
  const OccupationTable& large = a_smaller ? b : a;
  const int ps = a_smaller ? p : q;
  const int pl = a_smaller ? q : p;

  u128 sum = 0;
  bool overflow = false;
  small.counts.for_each([&](PackedSite key, std::int64_t count) {
    std::int64_t other = large.counts.count(key);
    if (other == 0) return;
    u128 term;
    if (mul_overflow(pow_u128(count, ps), pow_u128(other, pl), term)) {
      overflow = true;
      return;
    }
    u128 next;
    if (add_overflow(sum, term, next)) overflow = true;
    sum = next;
  });
  if (overflow) throw IntegrityError("mutual_intersection: 128-bit sum overflow");
  return sum;
}

u128 product_intersection(std::span<const OccupationTable* const> tables) {
  if (tables.empty()) throw UsageError("product_intersection: no tables");
  for (const OccupationTable* t : tables) {
    if (t->dim != tables[0]->dim) {
      throw UsageError("product_intersection: dimension mismatch");
    }
  }
  const OccupationTable* smallest = tables[0];
  for (const OccupationTable* t : tables) {
    if (t->counts.distinct() < smallest->counts.distinct()) smallest = t;
  }
  u128 sum = 0;
  bool overflow = false;
  smallest->counts.for_each([&](PackedSite key, std::int64_t) {
    u128 term = 1;
    for (const OccupationTable* t : tables) {
      std::int64_t c = t->counts.count(key);
      if (c == 0) {
        term = 0;
        break;
      }
      if (mul_overflow(term, static_cast<u128>(c), term)) {
        overflow = true;
        return;
      }
    }
    u128 next;
    if (add_overflow(sum, term, next)) overflow = true;
    sum = next;
  });
  if (overflow) throw IntegrityError("product_intersection: 128-bit sum overflow");
  return sum;
}

namespace {

double pow_signed(double base, int p) {
  double r = 1;
  for (int i = 0; i < p; ++i) r *= base;
  return r;
}

void check_renewal_coverage(const OccupationTable& tab, const ExpectedLocalTimeTable& expected,
                            const char* what) {
  if (tab.dim != 1) {
    throw UsageError(std::string(what) + ": recentered moments are defined for renewal walks (dim 1)");
  }
  bool gap = false;
  std::int64_t bad_site = 0;
  tab.counts.for_each([&](PackedSite key, std::int64_t) {
    Site s = unpack_site(key, 1);
    if (s[0] < 1 || s[0] > expected.size()) {
      gap = true;
      bad_site = s[0];
    }
  });
  if (gap) {
    throw IntegrityError(std::string(what) + ": visited site " + std::to_string(bad_site) +
                         " is not covered by the expected-local-time table (size " +
                         std::to_string(expected.size()) + ")");
  }
}

}  // namespace

double recentered_moment(const OccupationTable& tab, const ExpectedLocalTimeTable& expected,
                         int p) {
  if (p < 2) throw UsageError("recentered_moment: p must be >= 2");
  check_power(p, "recentered_moment");
  check_renewal_coverage(tab, expected, "recentered_moment");

  // Kahan over the union of supports; sites with E N > 0 that the path never
  // visited contribute (-E N)^p.
  double sum = 0, comp = 0;
  for (std::int64_t i = 1; i <= expected.size(); ++i) {
    double centered = static_cast<double>(tab.counts.count(pack_site(Site{i}, 1))) -
                      expected.values[static_cast<std::size_t>(i - 1)];
    double term = pow_signed(centered, p) - comp;
    double t = sum + term;
    comp = (t - sum) - term;
    sum = t;
  }
  return sum;
}

double recentered_cross_moment(const OccupationTable& a, const OccupationTable& b,
                               const ExpectedLocalTimeTable& expected, int k, int l) {
  if (k < 1 || l < 1) throw UsageError("recentered_cross_moment: k and l must be >= 1");
  check_power(std::max(k, l), "recentered_cross_moment");
  check_renewal_coverage(a, expected, "recentered_cross_moment");
  check_renewal_coverage(b, expected, "recentered_cross_moment");

  double sum = 0, comp = 0;
  for (std::int64_t i = 1; i <= expected.size(); ++i) {
    PackedSite key = pack_site(Site{i}, 1);
    double e = expected.values[static_cast<std::size_t>(i - 1)];
    double term = pow_signed(static_cast<double>(a.counts.count(key)) - e, k) *
                      pow_signed(static_cast<double>(b.counts.count(key)) - e, l) -
                  comp;
    double t = sum + term;
    comp = (t - sum) - term;
    sum = t;
  }
  return sum;
}

std::string IntersectionSummary::to_json() const {
  ordered_json j;
  j["n"] = horizon;
  ordered_json ji = ordered_json::object();
  for (const auto& [p, v] : i_values) ji[std::to_string(p)] = u128_json(v);
  j["I"] = std::move(ji);
  ordered_json jj = ordered_json::object();
  for (const auto& [p, v] : j_values) jj[std::to_string(p)] = v;
  j["J"] = std::move(jj);
  ordered_json jq = ordered_json::object();
  for (const auto& [pq, v] : q_values) {
    jq[std::to_string(pq.first) + "," + std::to_string(pq.second)] = u128_json(v);
  }
  j["Q"] = std::move(jq);
  if (range_intersection.has_value()) {
    j["range_intersection"] = u128_json(*range_intersection);
  }
  return j.dump();
}

}  // namespace rwrs
