#pragma once

#include <cstdint>
#include <random>

namespace specband {

// splitmix64 step. Used for deriving independent child seeds from a base
// seed plus a salt, so parallel work items get reproducible streams no
// matter the schedule.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t base, uint64_t salt) {
  return splitmix64(base ^ splitmix64(salt + 0x632be59bd9b4e019ULL));
}

inline uint64_t derive_seed(uint64_t base, uint64_t salt_a, uint64_t salt_b) {
  return derive_seed(derive_seed(base, salt_a), salt_b);
}

inline std::mt19937_64 make_engine(uint64_t seed) {
  return std::mt19937_64(splitmix64(seed));
}

}  // namespace specband
