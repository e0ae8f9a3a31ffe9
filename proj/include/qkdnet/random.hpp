#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace qkdnet {

// SplitMix64 finalizer over (root, index); used for per-point and
// per-substream seeds so serial and parallel sweeps draw identical streams.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept;

// Seeded random stream. Only the raw engine output is used (no std::
// distributions) so a given seed yields the same stream on every standard
// library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint8_t bit() { return static_cast<std::uint8_t>(engine_() >> 63); }

  // Uniform on [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);

  // Number of failures before the first success of a Bernoulli(p) sequence.
  // Returns max() when p <= 0.
  std::uint64_t geometric(double p);

  // Independent child stream.
  Rng fork() { return Rng(derive_seed(engine_(), 0x9e3779b97f4a7c15ULL)); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace qkdnet
