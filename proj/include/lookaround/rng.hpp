#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace lookaround {

/// Named-stream seeding: every consumer of randomness derives its own engine
/// from (top-level seed, purpose string, integer coordinates). No global RNG.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_purpose(std::string_view purpose) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : purpose) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t stream_key(std::uint64_t seed, std::string_view purpose,
                                   std::initializer_list<std::uint64_t> coords = {}) noexcept {
  std::uint64_t h = splitmix64(seed ^ splitmix64(hash_purpose(purpose)));
  for (std::uint64_t c : coords) h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t seed, std::string_view purpose,
                    std::initializer_list<std::uint64_t> coords = {}) {
  return Rng(stream_key(seed, purpose, coords));
}

inline Rng make_rng(std::uint64_t key) { return Rng(key); }

}  // namespace lookaround
