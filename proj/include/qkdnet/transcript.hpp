#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qkdnet/bb84.hpp"

namespace qkdnet {

struct StageLengths {
  std::uint64_t raw = 0;  // pulses sent
  std::size_t sifted = 0;
  std::size_t sampled = 0;
  std::size_t corrected = 0;
  std::size_t final = 0;

  bool monotone() const noexcept {
    return final <= corrected && corrected <= sifted && sifted <= raw;
  }
};

// What a node holds with certainty about the sifted key.
struct NodeKnowledge {
  std::string node;
  std::string role;  // "source", "relay", "adversary"
  std::size_t known_bits = 0;
  std::size_t sifted_bits = 0;
};

// One classical one-time-pad hop of the XOR relay.
struct HopUsage {
  std::string from;
  std::string to;
  std::size_t message_bits = 0;
  std::size_t key_bits_used = 0;
  bool decoded_ok = false;
};

struct AdversaryStats {
  std::string link;
  std::size_t attacked = 0;      // over detected positions
  std::size_t known_sifted = 0;  // sifted positions known with certainty
};

// Counts of (QNC1, QBS, QNC2) basis triples by agreement class.
struct BasisClassCounts {
  std::size_t secret_key = 0;
  std::size_t partial_secret_key = 0;
  std::size_t no_secret_key = 0;
};

struct SessionTranscript {
  std::string session_id;
  std::string protocol;
  std::uint64_t seed = 0;

  std::uint64_t pulses_sent = 0;
  std::size_t detected = 0;  // positions seen by every party that must click
  StageLengths lengths;

  // Per detected position (index = position in the detected list).
  std::vector<std::uint64_t> detected_pulses;
  std::vector<Basis> bases_a;
  std::vector<Basis> bases_b;
  std::vector<std::size_t> kept_positions;    // into the detected list
  std::vector<std::size_t> sample_positions;  // into the sifted key

  double sifted_qber = 0;    // true disagreement on the sifted key (audit)
  std::size_t sample_mismatches = 0;
  double measured_qber = 0;  // sacrificial-sample estimate
  double effective_qber = 0; // value fed to the length formula
  std::size_t leaked_bits = 0;
  std::size_t verification_bits = 0;
  int reconciliation_passes = 0;
  std::uint64_t amplification_seed = 0;

  bool aborted = false;
  std::string abort_reason;
  bool no_key_distillable = false;
  bool keys_match = false;

  std::vector<NodeKnowledge> knowledge;
  std::vector<HopUsage> hops;
  std::vector<AdversaryStats> adversaries;
  std::optional<BasisClassCounts> basis_classes;

  double sifted_fraction() const noexcept {
    return detected == 0 ? 0.0 : static_cast<double>(lengths.sifted) / static_cast<double>(detected);
  }
};

}  // namespace qkdnet
