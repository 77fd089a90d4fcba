#pragma once

#include <cstdint>
#include <string>

namespace rwrs {

// Intersection functionals can reach n^p; accumulate them in 128 bits.
using u128 = unsigned __int128;

inline std::string u128_to_string(u128 v) {
  if (v == 0) return "0";
  char buf[40];
  int pos = 40;
  while (v > 0) {
    buf[--pos] = static_cast<char>('0' + static_cast<int>(v % 10));
    v /= 10;
  }
  return std::string(buf + pos, buf + 40);
}

inline double u128_to_double(u128 v) {
  return static_cast<double>(v);
}

inline bool fits_u64(u128 v) {
  return (v >> 64) == 0;
}

// Multiply with overflow detection; used when raising visit counts to p.
inline bool mul_overflow(u128 a, u128 b, u128& out) {
  if (a != 0 && b > ~u128(0) / a) return true;
  out = a * b;
  return false;
}

inline bool add_overflow(u128 a, u128 b, u128& out) {
  out = a + b;
  return out < a;
}

}  // namespace rwrs
