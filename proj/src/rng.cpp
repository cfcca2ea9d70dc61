#include "mixfree/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mixfree {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix(splitmix(master) ^ (stream + 0x632be59bd9b4e019ULL));
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  return derive_seed(derive_seed(derive_seed(master, a), b), c);
}

std::size_t Rng::categorical(std::span<const double> cdf) {
  const double u = uniform() * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  // upper_bound never lands on a zero-mass entry.
  if (it == cdf.end()) --it;
  return static_cast<std::size_t>(it - cdf.begin());
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace mixfree
