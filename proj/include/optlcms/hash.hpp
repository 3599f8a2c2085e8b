#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace optlcms {

// Mersenne prime 2^61 - 1, field for the pairwise-independent row hashes.
inline constexpr uint64_t kMersenne61 = (uint64_t{1} << 61) - 1;

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// FNV-1a over raw bytes, used to condense an element into the 64-bit
// domain the row hashes operate on.
inline uint64_t fingerprint64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t mulmod_m61(uint64_t a, uint64_t b) {
  __uint128_t z = static_cast<__uint128_t>(a) * b;
  uint64_t lo = static_cast<uint64_t>(z) & kMersenne61;
  uint64_t hi = static_cast<uint64_t>(z >> 61);
  uint64_t s = lo + hi;
  if (s >= kMersenne61) s -= kMersenne61;
  return s;
}

// One row of the 2-universal family h(x) = ((a*x + b) mod p) mod width.
struct RowHash {
  uint64_t a = 1;
  uint64_t b = 0;

  uint64_t index(uint64_t fingerprint, uint64_t width) const {
    uint64_t v = mulmod_m61(a, fingerprint % kMersenne61) + b;
    if (v >= kMersenne61) v -= kMersenne61;
    return v % width;
  }
};

// Draws `depth` (a, b) pairs from `seed`; a is never zero.
inline std::vector<RowHash> make_row_hashes(uint64_t seed, size_t depth) {
  std::vector<RowHash> rows(depth);
  uint64_t state = seed;
  for (auto& r : rows) {
    do {
      state = splitmix64(state);
      r.a = state % kMersenne61;
    } while (r.a == 0);
    state = splitmix64(state);
    r.b = state % kMersenne61;
  }
  return rows;
}

}  // namespace optlcms
