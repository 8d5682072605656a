#pragma once

#include <cstdint>
#include <random>

namespace unroll {

/// SplitMix64 finalizer. Used to derive decorrelated seeds for independent
/// random streams from one user seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream tags. Each tensor draw uses its own stream so that, for example,
/// changing the sparsity never perturbs the nonzero values.
enum class Stream : std::uint64_t {
  weight_positions = 0x5157'0001,
  weight_values = 0x5157'0002,
  inputs = 0x5157'0003,
  trial = 0x5157'0004,
};

/// Portable random stream: std::mt19937_64 output is fixed by the standard,
/// and the bounded draws below avoid the implementation-defined standard
/// distributions, so artifacts are byte-reproducible across toolchains.
class Rng {
 public:
  Rng(std::uint64_t seed, Stream stream)
      : engine_(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream)))) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % bound);
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % bound;
  }

  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace unroll
