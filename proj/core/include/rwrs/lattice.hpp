#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "rwrs/errors.hpp"
#include "rwrs/rng.hpp"

namespace rwrs {

// Lattice dimensions 1..8 are supported; coordinates are signed 64-bit.
inline constexpr int kMaxDim = 8;

// Fixed-capacity coordinate vector; only the first `dim` entries of a Site
// are meaningful in any given context.
using Site = std::array<std::int64_t, kMaxDim>;

inline Site make_site(std::span<const std::int64_t> coords) {
  if (coords.size() > static_cast<std::size_t>(kMaxDim)) {
    throw UsageError("site has more than " + std::to_string(kMaxDim) + " coordinates");
  }
  Site s{};
  for (std::size_t i = 0; i < coords.size(); ++i) s[i] = coords[i];
  return s;
}

inline Site make_site(std::initializer_list<std::int64_t> coords) {
  return make_site(std::span<const std::int64_t>(coords.begin(), coords.size()));
}

constexpr std::uint64_t zigzag(std::int64_t x) {
  return (static_cast<std::uint64_t>(x) << 1) ^ static_cast<std::uint64_t>(x >> 63);
}

constexpr std::int64_t unzigzag(std::uint64_t u) {
  return static_cast<std::int64_t>(u >> 1) ^ -static_cast<std::int64_t>(u & 1);
}

// Sparse occupation maps are keyed by the packed coordinates. The per-axis
// bit widths divide 128 bits among the dimensions; the resulting coordinate
// ranges are far beyond anything a walk of <= 1e7 bounded steps can reach.
using PackedSite = unsigned __int128;

constexpr int packed_bits_per_coord(int dim) {
  switch (dim) {
    case 1: return 64;
    case 2: return 64;
    case 3: return 42;
    case 4: return 32;
    case 5: return 25;
    case 6: return 21;
    case 7: return 18;
    case 8: return 16;
    default: return 0;
  }
}

inline PackedSite pack_site(const Site& s, int dim) {
  const int bits = packed_bits_per_coord(dim);
  PackedSite key = 0;
  for (int i = 0; i < dim; ++i) {
    std::uint64_t z = zigzag(s[i]);
    if (bits < 64 && (z >> bits) != 0) {
      throw IntegrityError("site coordinate " + std::to_string(s[i]) +
                           " exceeds the packable range for dimension " + std::to_string(dim));
    }
    key = (key << bits) | PackedSite(z);
  }
  return key;
}

inline Site unpack_site(PackedSite key, int dim) {
  const int bits = packed_bits_per_coord(dim);
  const PackedSite mask = (bits >= 128) ? ~PackedSite(0) : ((PackedSite(1) << bits) - 1);
  Site s{};
  for (int i = dim - 1; i >= 0; --i) {
    s[i] = unzigzag(static_cast<std::uint64_t>(key & mask));
    key >>= bits;
  }
  return s;
}

inline std::uint64_t hash_packed(PackedSite key) {
  auto lo = static_cast<std::uint64_t>(key);
  auto hi = static_cast<std::uint64_t>(key >> 64);
  return mix64(lo ^ mix64(hi ^ 0x8BADF00D5DEECE66ull));
}

}  // namespace rwrs
