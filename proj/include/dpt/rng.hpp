#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dpt {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream for a (seed, coordinates...) tuple; generation order does
// not matter, so cells can be drawn in parallel.
inline std::mt19937_64 derive_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> coords) {
  std::uint64_t h = splitmix64(seed);
  for (auto c : coords) h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
  return std::mt19937_64(h);
}

inline std::int64_t draw_binomial(std::mt19937_64& gen, std::int64_t trials, double p) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  std::binomial_distribution<std::int64_t> dist(trials, p);
  return dist(gen);
}

}  // namespace dpt
