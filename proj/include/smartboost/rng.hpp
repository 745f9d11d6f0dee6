#pragma once

#include <cstdint>

namespace smartboost {

// Stateless generator: every draw is a pure function of (seed, stream, counter),
// so per-instance sampling needs no shared state and is independent of the
// order or partitioning in which instances are visited.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  constexpr std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const noexcept {
    std::uint64_t x = mix(seed_ ^ 0x9e3779b97f4a7c15ULL);
    x = mix(x ^ (stream + 0x632be59bd9b4e019ULL));
    x = mix(x ^ (counter + 0x85157af5ULL));
    return x;
  }

  // Uniform in [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t stream, std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(stream, counter) >> 11) * 0x1.0p-53;
  }

  constexpr bool bernoulli(double p, std::uint64_t stream, std::uint64_t counter) const noexcept {
    return uniform(stream, counter) < p;
  }

  constexpr std::uint64_t seed() const noexcept { return seed_; }

 private:
  // splitmix64 finalizer
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
};

}  // namespace smartboost
