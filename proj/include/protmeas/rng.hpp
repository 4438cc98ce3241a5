#pragma once

#include <cstdint>
#include <random>

namespace protmeas {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeded random source. Every stochastic operation takes one of these
/// explicitly; there is no ambient randomness anywhere in the library.
///
/// `split(i)` derives a child stream whose seed depends only on the parent
/// seed and `i`, so parallel trials can be scheduled in any order and still
/// reproduce the same draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits; platform independent.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  Rng split(std::uint64_t stream) const {
    return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace protmeas
