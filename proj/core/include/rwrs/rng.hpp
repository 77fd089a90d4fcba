#pragma once

#include <cmath>
#include <cstdint>

namespace rwrs {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer (Steele/Lea/Flood; constants by Stafford). Bijective
// avalanche on 64 bits; the workhorse behind both the counter-based scenery
// field and the walk substreams.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

constexpr double unit_from_bits(std::uint64_t w) {
  // [0, 1), 53 significant bits
  return static_cast<double>(w >> 11) * 0x1.0p-53;
}

constexpr double unit_open_from_bits(std::uint64_t w) {
  // (0, 1], safe as a log() argument
  return static_cast<double>((w >> 11) + 1) * 0x1.0p-53;
}

// Deterministic splitmix64 stream. Copyable value type; a stream is fully
// determined by its 64-bit state, so substreams derived via child() are
// reproducible regardless of thread scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  double next_unit() { return unit_from_bits(next_u64()); }
  double next_unit_open() { return unit_open_from_bits(next_u64()); }

  // Unbiased integer in [0, bound) via Lemire's multiply-shift with rejection.
  std::uint64_t next_below(std::uint64_t bound) {
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      std::uint64_t threshold = -bound % bound;
      while (lo < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * bound;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Standard normal via Box-Muller (no caching: draw count stays a pure
  // function of call count).
  double next_normal() {
    double u1 = next_unit_open();
    double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // Derive an independent substream. Domain-separated from next_u64 so a
  // stream and its children never share outputs.
  RngStream child(std::uint64_t key) const {
    std::uint64_t h = mix64(state_ ^ 0xD1B54A32D192ED03ull);
    h = mix64(h + kGolden * (2 * key + 1));
    return RngStream(h);
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace rwrs
