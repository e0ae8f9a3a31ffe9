#pragma once

// BB84 primitives: symbol preparation, measurement through a lossy channel,
// sifting and sacrificial QBER estimation.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qkdnet/channel.hpp"
#include "qkdnet/key.hpp"
#include "qkdnet/random.hpp"

namespace qkdnet {

// The two conjugate measurement settings. sigma_x stands for the phase pair
// {0, pi}, sigma_y for {pi/2, 3pi/2}.
enum class Basis : std::uint8_t { sigma_x = 0, sigma_y = 1 };

std::string_view to_string(Basis basis) noexcept;

inline Basis random_basis(Rng& rng) { return rng.bit() ? Basis::sigma_y : Basis::sigma_x; }

struct QubitSymbol {
  std::uint8_t bit = 0;
  Basis basis = Basis::sigma_x;
  bool operator==(const QubitSymbol&) const = default;
};

// A receiver-side record: measured bit and the basis used; nullopt = lost.
using Measurement = std::optional<QubitSymbol>;

// n uniform, independent (bit, basis) pairs. Throws std::invalid_argument for n = 0.
std::vector<QubitSymbol> prepare_sequence(std::size_t n, Rng& rng);

// Outcome bit of measuring `sent` in `receiver` after a click of the given
// origin. Matched basis: sent bit, flipped with e_optical. Mismatched basis
// or dark click: uniform.
std::uint8_t measure_symbol(const QubitSymbol& sent, Basis receiver, ClickOrigin origin,
                            double e_optical, Rng& rng);

// Receiver picks a uniform basis per position.
std::vector<Measurement> measure_sequence(std::span<const QubitSymbol> symbols,
                                          const ChannelParams& channel, Rng& rng);

// Receiver bases supplied by the caller (one per symbol).
std::vector<Measurement> measure_sequence(std::span<const QubitSymbol> symbols,
                                          std::span<const Basis> receiver_bases,
                                          const ChannelParams& channel, Rng& rng);

struct SiftResult {
  KeyMaterial key_a;
  KeyMaterial key_b;
  std::vector<std::size_t> kept;  // positions with a click and matching bases
};

// Throws ProtocolDesyncError on length mismatch.
SiftResult sift(std::span<const QubitSymbol> sent, std::span<const Measurement> received,
                std::string_view session = {});

struct QberEstimate {
  double estimate = 0;
  std::size_t sample_size = 0;
  std::size_t mismatches = 0;
  std::vector<std::size_t> sample_positions;  // sorted, into the input keys
  KeyMaterial remaining_a;
  KeyMaterial remaining_b;
};

// Compares and discards a uniform random sample of round(fraction * n)
// positions (at least one). Throws std::invalid_argument for a fraction
// outside (0, 1), ProtocolDesyncError for unequal keys and
// InsufficientKeyError when the sample would leave nothing.
QberEstimate estimate_qber(const KeyMaterial& key_a, const KeyMaterial& key_b,
                           double sample_fraction, Rng& rng);

}  // namespace qkdnet
