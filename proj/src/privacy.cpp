#include "qkdnet/privacy.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "qkdnet/random.hpp"

namespace qkdnet {

double binary_entropy(double p) {
  if (p < 0 || p > 1) throw std::domain_error("binary_entropy: p outside [0, 1]");
  if (p == 0 || p == 1) return 0.0;
  return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

std::size_t final_key_length(std::size_t n, double qber, std::size_t leaked_bits,
                             std::size_t security_margin) {
  const double length = std::floor(static_cast<double>(n) * (1.0 - binary_entropy(qber)) -
                                    static_cast<double>(leaked_bits) -
                                    static_cast<double>(security_margin));
  return length > 0 ? static_cast<std::size_t>(length) : 0;
}

Bits toeplitz_hash(std::span<const std::uint8_t> input, std::size_t out_len, std::uint64_t seed) {
  const std::size_t n = input.size();
  Bits out(out_len, 0);
  if (n == 0 || out_len == 0) return out;

  // out_i = XOR_k r[i + k] * x[n - 1 - k]: a sliding window over the
  // diagonal bits against the reversed input.
  const std::size_t in_words = (n + 63) / 64;
  std::vector<std::uint64_t> y(in_words, 0);
  for (std::size_t k = 0; k < n; ++k) {
    if (input[n - 1 - k] & 1U) y[k / 64] |= 1ULL << (k % 64);
  }
  const std::size_t diag_words = in_words + (out_len + 63) / 64 + 1;
  std::vector<std::uint64_t> r(diag_words);
  Rng rng(seed);
  for (auto& w : r) w = rng.next();

  for (std::size_t i = 0; i < out_len; ++i) {
    const std::size_t base = i / 64;
    const unsigned shift = static_cast<unsigned>(i % 64);
    std::uint64_t acc = 0;
    if (shift == 0) {
      for (std::size_t w = 0; w < in_words; ++w) acc ^= r[base + w] & y[w];
    } else {
      for (std::size_t w = 0; w < in_words; ++w) {
        const std::uint64_t window = (r[base + w] >> shift) | (r[base + w + 1] << (64 - shift));
        acc ^= window & y[w];
      }
    }
    out[i] = static_cast<std::uint8_t>(std::popcount(acc) & 1);
  }
  return out;
}

KeyMaterial privacy_amplify(const KeyMaterial& key, double measured_qber, std::size_t leaked_bits,
                            std::uint64_t seed, std::size_t security_margin) {
  if (key.empty()) throw std::invalid_argument("privacy_amplify: empty key");
  if (key.stage() != KeyStage::corrected) {
    throw std::logic_error("privacy_amplify: key must be at the corrected stage");
  }
  const std::size_t len = final_key_length(key.size(), measured_qber, leaked_bits, security_margin);
  return key.advance(KeyStage::final, toeplitz_hash(key.bits(), len, seed));
}

}  // namespace qkdnet
