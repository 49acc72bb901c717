#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace nmpg {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives an independent stream from a master seed, a stream name and a counter.
/// Streams never share state, so adding a consumer leaves the others untouched.
inline Rng substream(std::uint64_t master, std::string_view name,
                     std::uint64_t counter = 0) {
  std::uint64_t k = splitmix64(master ^ splitmix64(fnv1a(name)));
  k = splitmix64(k ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  return Rng(seq);
}

// 53-bit uniform in [0,1); independent of the standard library's distributions.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Inverse-CDF draw; the last positive entry absorbs round-off.
inline int sample_categorical(std::span<const double> p, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  int last = -1;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    acc += p[k];
    last = static_cast<int>(k);
    if (u < acc) return last;
  }
  return last;
}

inline double standard_normal(Rng& rng) {
  // Box-Muller on our own uniforms keeps draws identical across standard libraries.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace nmpg
