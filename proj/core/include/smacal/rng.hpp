#pragma once

#include <cstdint>
#include <random>

namespace smacal {

// Mixes a base seed with a stream index so that independent sub-streams
// (per chain, per design replicate, per candidate) never share state.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

/// Explicit, seedable random state. Every stochastic routine takes one by
/// reference; nothing in the library touches a global generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  /// Uniform on [0, 1).
  double uniform();
  double normal();
  /// Gamma(shape, 1).
  double gamma(double shape);

  Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace smacal
