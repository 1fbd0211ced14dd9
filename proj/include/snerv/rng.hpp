#pragma once

#include <cmath>
#include <cstdint>

namespace snerv {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Counter-based streams: the draw at a given (seed, counter) does not depend
// on evaluation order, so parallel consumers stay reproducible.
inline double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t h =
      splitmix64(splitmix64(seed ^ 0x517cc1b727220a95ull) ^ splitmix64(counter));
  return static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double counter_gaussian(std::uint64_t seed, std::uint64_t counter) {
  double u1 = counter_uniform(seed, counter * 2);
  double u2 = counter_uniform(seed, counter * 2 + 1);
  if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace snerv
