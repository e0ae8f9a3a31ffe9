#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "qkdnet/key.hpp"

namespace qkdnet {

inline constexpr std::size_t kDefaultSecurityMargin = 30;

// h2(p) = -p log2 p - (1-p) log2(1-p); h2(0) = h2(1) = 0.
double binary_entropy(double p);

// max(0, floor(n (1 - h2(e)) - leaked - margin)).
std::size_t final_key_length(std::size_t n, double qber, std::size_t leaked_bits,
                             std::size_t security_margin = kDefaultSecurityMargin);

// Multiplies `input` by a random binary Toeplitz matrix of shape
// out_len x input.size(). The n + out_len - 1 diagonal bits are generated
// from `seed`, so both parties obtain the same output from the same seed.
Bits toeplitz_hash(std::span<const std::uint8_t> input, std::size_t out_len, std::uint64_t seed);

// Compresses a corrected key to final_key_length(...) bits. An empty FINAL
// key means nothing is distillable. Throws std::invalid_argument for an
// empty input and std::logic_error if `key` is not at the corrected stage.
KeyMaterial privacy_amplify(const KeyMaterial& key, double measured_qber, std::size_t leaked_bits,
                            std::uint64_t seed,
                            std::size_t security_margin = kDefaultSecurityMargin);

}  // namespace qkdnet
