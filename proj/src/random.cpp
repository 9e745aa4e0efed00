#include "halrp/random.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>

namespace halrp {

double Rng::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::index(std::size_t n) {
  if (n <= 1) return 0;
  const std::uint64_t max = n - 1;
  const std::uint64_t mask = std::bit_ceil(max + 1) - 1;
  std::uint64_t v = engine_() & mask;
  while (v > max) v = engine_() & mask;
  return static_cast<std::size_t>(v);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> legacy_permutation(std::size_t n, std::uint32_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937 mt(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::uint32_t max = static_cast<std::uint32_t>(i - 1);
    std::uint32_t mask = max;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    std::uint32_t j = static_cast<std::uint32_t>(mt()) & mask;
    while (j > max) j = static_cast<std::uint32_t>(mt()) & mask;
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

}  // namespace halrp
