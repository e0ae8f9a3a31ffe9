#pragma once

// Interactive error correction: Cascade-style block parities with binary
// search and backtracking into earlier passes.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "qkdnet/classical_channel.hpp"
#include "qkdnet/key.hpp"
#include "qkdnet/random.hpp"

namespace qkdnet {

struct CascadeOptions {
  // Sets the first block size, ceil(0.73 / qber_estimate).
  double qber_estimate = 0.01;
  // Sessions whose estimate exceeds this are aborted before any disclosure.
  double max_qber = 0.11;
  // Regular schedule: block size doubles each pass.
  int passes = 4;
  // Iteration budget. Passes after `passes` reuse the last block size with
  // fresh permutations until the verification tags agree.
  int max_passes = 8;
  // Overrides the first block size (tests, hand traces).
  std::optional<std::size_t> initial_block_size;
};

struct Reconciliation {
  KeyMaterial corrected_a;
  KeyMaterial corrected_b;
  std::size_t leaked_bits = 0;        // parity bits disclosed
  std::size_t verification_bits = 0;  // hash tag bits disclosed
  int passes_run = 0;
  std::size_t bits_flipped = 0;
};

std::size_t initial_block_size(double qber_estimate, std::size_t key_length);

// Corrects key_b towards key_a. After each pass the parties compare a 64-bit
// universal hash; matching tags end the exchange. All permutations and hash
// keys come from `rng` and are treated as public.
//
// Throws SessionAborted("qber-threshold") when the estimate exceeds
// max_qber, and SessionAborted("reconciliation-failed") when the tags still
// differ after max_passes.
Reconciliation error_correct(const KeyMaterial& key_a, const KeyMaterial& key_b,
                             ClassicalChannel& channel, const CascadeOptions& options, Rng& rng);

// Polynomial hash over 32-bit chunks modulo 2^61 - 1 evaluated at `point`.
std::uint64_t key_tag(std::span<const std::uint8_t> bits, std::uint64_t point);

}  // namespace qkdnet
