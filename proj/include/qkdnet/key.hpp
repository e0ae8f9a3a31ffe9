#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qkdnet {

// One bit per element, values 0/1.
using Bits = std::vector<std::uint8_t>;

enum class KeyStage : std::uint8_t { raw, sifted, corrected, final };

std::string_view to_string(KeyStage stage) noexcept;

// A key at a given processing stage. Stages only move forward and never grow.
class KeyMaterial {
 public:
  KeyMaterial() = default;
  KeyMaterial(Bits bits, KeyStage stage, std::string origin_session)
      : bits_(std::move(bits)), stage_(stage), origin_(std::move(origin_session)) {}

  const Bits& bits() const noexcept { return bits_; }
  KeyStage stage() const noexcept { return stage_; }
  const std::string& origin_session() const noexcept { return origin_; }
  std::size_t size() const noexcept { return bits_.size(); }
  bool empty() const noexcept { return bits_.empty(); }

  // Successor material. Throws std::logic_error if `next` is not later than
  // the current stage or `bits` is longer than the current key.
  KeyMaterial advance(KeyStage next, Bits bits) const;

  // Same stage, shorter key (e.g. after discarding sampled positions).
  KeyMaterial shrink(Bits bits) const;

  bool operator==(const KeyMaterial&) const = default;

 private:
  Bits bits_;
  KeyStage stage_ = KeyStage::raw;
  std::string origin_;
};

// Element-wise XOR; throws std::invalid_argument on length mismatch.
Bits xor_bits(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

std::size_t hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

// "0101..." rendering and parsing, for tests and transcripts.
std::string to_bitstring(std::span<const std::uint8_t> bits);
Bits from_bitstring(std::string_view text);

}  // namespace qkdnet
