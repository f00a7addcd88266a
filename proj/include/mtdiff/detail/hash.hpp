#pragma once

#include <cstdint>
#include <string_view>

namespace mtdiff::detail {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Counter-based bit stream: the value depends only on the inputs, never on
// call order, so parallel consumers stay reproducible.
constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream,
                                     std::uint64_t counter, std::uint64_t item) {
  std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc908ull);
  h = splitmix64(h ^ stream);
  h = splitmix64(h + counter * 0x9e3779b97f4a7c15ull);
  h = splitmix64(h ^ item);
  return h;
}

constexpr bool counter_bit(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t counter, std::uint64_t item) {
  return (counter_hash(seed, stream, counter, item) & 1ull) != 0;
}

}  // namespace mtdiff::detail
