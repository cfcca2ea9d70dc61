#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace mixfree {

/// Mixes a master seed with a stream index (splitmix64 finalizer). Used to
/// give every trial, replicate and block its own reproducible stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c = 0);

/// Platform-independent generator. std:: distributions are avoided on
/// purpose: their output is implementation-defined, ours is bit-reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Index i with probability proportional to cdf[i] - cdf[i-1]; `cdf` is a
  /// nondecreasing cumulative table whose last entry is the total mass.
  std::size_t categorical(std::span<const double> cdf);

  /// Fair ±1.
  double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

  /// Standard normal (Box-Muller on uniform()).
  double normal();

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mixfree
