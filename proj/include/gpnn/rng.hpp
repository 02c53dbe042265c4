#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace gpnn {

/// Seedable generator with platform-independent draws.
///
/// The engine is std::mt19937_64 (bit-exact across standard libraries); the
/// derived distributions are computed here rather than with the
/// <random> distribution classes, whose outputs are implementation-defined.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  /// Standard normal via Box-Muller (one value per two uniforms).
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

  /// Uniformly random permutation of 0..n-1.
  std::vector<int> permutation(int n);

private:
  std::mt19937_64 engine_;
};

/// Sub-seed for a named component, derived from a top-level seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

} // namespace gpnn
