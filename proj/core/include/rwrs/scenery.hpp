#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rwrs/lattice.hpp"

namespace rwrs {

// Marginal law of one scenery variable. All three are centered with unit
// variance; Rademacher and StandardGaussian additionally have every moment
// finite, CenteredUniform is uniform on [-sqrt(3), sqrt(3)).
enum class SceneryLaw {
  kRademacher,
  kStandardGaussian,
  kCenteredUniform,
};

std::string to_string(SceneryLaw law);
SceneryLaw scenery_law_from_string(const std::string& name);

// The quenched scenery: an immutable descriptor whose eval() is a pure
// function of (seed, site, law). Realized as a counter-based construction:
// the seed and the zig-zag-encoded coordinates are folded through the
// splitmix64 avalanche into a per-site 64-bit state, from which law-specific
// words are drawn. The same field is therefore shared by any number of
// concurrent walk samples with no storage and no synchronization.
//
// Reproducibility contract (any port must match it bit for bit):
//   h0     = mix64(seed ^ 0x5CE4E5B9D1CE4E5Bu)
//   h(i+1) = mix64(h(i) ^ (zigzag(x_i) + kGolden))      for each coordinate
//   word_j = mix64(h(dim) + (j + 1) * kGolden)
//   Rademacher:      top bit of word_0 -> +1 / -1
//   StandardGaussian: Box-Muller sqrt(-2 ln u1) * cos(2 pi u2) with
//                     u1 = ((word_0 >> 11) + 1) * 2^-53 in (0,1],
//                     u2 = (word_1 >> 11) * 2^-53 in [0,1)
//   CenteredUniform:  (u0 - 0.5) * 2 sqrt(3) with u0 = (word_0 >> 11) * 2^-53
struct SiteField {
  std::uint64_t seed = 0;
  int dim = 1;
  SceneryLaw law = SceneryLaw::kRademacher;

  double eval(std::span<const std::int64_t> site) const;
  double eval(const Site& site) const {
    return eval(std::span<const std::int64_t>(site.data(), static_cast<std::size_t>(dim)));
  }

  // Element-wise identical to repeated eval(); exists so callers can amortize
  // call overhead over a block of sites.
  std::vector<double> eval_batch(std::span<const Site> sites) const;
};

// Debug dump of a finite window as CSV: one row per site, coordinates then
// value. `lo`/`hi` are inclusive per-axis corner coordinates.
void dump_window(const SiteField& field, const Site& lo, const Site& hi, std::ostream& out);

}  // namespace rwrs
