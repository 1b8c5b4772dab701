#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace lily {

/// Reproducible random stream. The engine is std::mt19937_64 (its output
/// sequence is fixed by the standard); every distribution is implemented here
/// rather than taken from <random>, whose distributions are
/// implementation-defined. Streams are values: copy one to fork it.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Child stream keyed by `path`, independent of the parent's position.
  /// Rng(s).derive({segment, block}) is the same stream on every call.
  Rng derive(std::initializer_list<std::uint64_t> path) const;

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal (Marsaglia polar method).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Gamma(shape, scale = 1), Marsaglia-Tsang; shapes below one use the
  /// U^(1/shape) boost.
  double gamma(double shape);
  /// +1 or -1 with equal probability.
  double sign() { return (next_u64() >> 63) != 0 ? 1.0 : -1.0; }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Seeded stream constructor.
inline Rng seeded_rng(std::uint64_t seed) { return Rng(seed); }

/// SplitMix64 finalizer used to decorrelate derived seeds.
std::uint64_t mix_seed(std::uint64_t x);

}  // namespace lily
