#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace halrp {

/// Seeded generator with platform-independent derived distributions.
///
/// The standard library distributions are implementation-defined, so
/// uniform/normal/index draws are built directly on the 64-bit engine
/// output to keep generated data byte-identical everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one value per call).
  double normal();

  /// Unbiased integer in [0, n) by masked rejection.
  std::size_t index(std::size_t n);

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and a salt.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

/// Permutation of [0, n) matching numpy's legacy `seed(s); permutation(n)`.
std::vector<std::size_t> legacy_permutation(std::size_t n, std::uint32_t seed);

}  // namespace halrp
