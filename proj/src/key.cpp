#include "qkdnet/key.hpp"

#include <stdexcept>

namespace qkdnet {

std::string_view to_string(KeyStage stage) noexcept {
  switch (stage) {
    case KeyStage::raw: return "raw";
    case KeyStage::sifted: return "sifted";
    case KeyStage::corrected: return "corrected";
    case KeyStage::final: return "final";
  }
  return "unknown";
}

KeyMaterial KeyMaterial::advance(KeyStage next, Bits bits) const {
  if (static_cast<int>(next) <= static_cast<int>(stage_)) {
    throw std::logic_error("KeyMaterial: stage may only move forward");
  }
  if (bits.size() > bits_.size()) {
    throw std::logic_error("KeyMaterial: a later stage cannot be longer");
  }
  return KeyMaterial(std::move(bits), next, origin_);
}

KeyMaterial KeyMaterial::shrink(Bits bits) const {
  if (bits.size() > bits_.size()) throw std::logic_error("KeyMaterial: shrink cannot grow the key");
  return KeyMaterial(std::move(bits), stage_, origin_);
}

Bits xor_bits(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("xor_bits: length mismatch");
  Bits out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] ^ b[i]) & 1U;
  return out;
}

std::size_t hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("hamming_distance: length mismatch");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] ^ b[i]) & 1U;
  return d;
}

std::string to_bitstring(std::span<const std::uint8_t> bits) {
  std::string s;
  s.reserve(bits.size());
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

Bits from_bitstring(std::string_view text) {
  Bits out;
  out.reserve(text.size());
  for (char c : text) {
    if (c != '0' && c != '1') throw std::invalid_argument("from_bitstring: expected 0/1");
    out.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return out;
}

}  // namespace qkdnet
