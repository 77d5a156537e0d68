#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mmassoc {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child seed = hash(master, purpose, entity). Every random consumer in a run
/// draws from its own stream so adding a consumer never shifts another one.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                           std::uint64_t entity = 0) noexcept {
  return splitmix64(splitmix64(master ^ fnv1a64(purpose)) + splitmix64(entity + 0x632be59bd9b4e019ULL));
}

inline Rng make_stream(std::uint64_t master, std::string_view purpose, std::uint64_t entity = 0) {
  return Rng{derive_seed(master, purpose, entity)};
}

}  // namespace mmassoc
