#pragma once

#include <bit>
#include <cstdint>
#include <string_view>

namespace overlap_sketch {

// rrmxmx finalizer (Pelle Evensen). A bijection on 64-bit words with full
// avalanche, so for a fixed seed distinct elements never collide.
constexpr std::uint64_t mix64(std::uint64_t v) noexcept {
  v ^= std::rotr(v, 49) ^ std::rotr(v, 24);
  v *= 0x9FB21C651E98DF25ULL;
  v ^= v >> 28;
  v *= 0x9FB21C651E98DF25ULL;
  return v ^ (v >> 28);
}

// splitmix64 output function; a second, unrelated mixer for partitioning and
// seed derivation.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Canonical 8-byte encoding of a signed element.
constexpr std::uint64_t encode_element(std::int64_t e) noexcept { return static_cast<std::uint64_t>(e); }

// One member of the MinHash family.
constexpr std::uint64_t seeded_hash(std::uint64_t seed, std::uint64_t encoded) noexcept { return mix64(encoded ^ seed); }

// Byte-string front end: FNV-1a over the bytes, then mixed. Used to turn text
// tokens into 64-bit elements before sketching.
constexpr std::uint64_t hash_bytes(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return mix64(h ^ bytes.size());
}

// Child seed for stream `index` of a master seed. Used for per-trial
// generators so trials can run in any order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(master ^ splitmix64(index ^ 0xD1B54A32D192ED03ULL));
}

}  // namespace overlap_sketch
