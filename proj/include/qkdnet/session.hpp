#pragma once

// Complete two-party sessions: sifted keys in, final keys and an audit
// transcript out.

#include <cstdint>
#include <optional>
#include <string>

#include "qkdnet/adversary.hpp"
#include "qkdnet/channel.hpp"
#include "qkdnet/key.hpp"
#include "qkdnet/privacy.hpp"
#include "qkdnet/random.hpp"
#include "qkdnet/transcript.hpp"

namespace qkdnet {

struct DistillOptions {
  double sample_fraction = 0.1;
  std::size_t security_margin = kDefaultSecurityMargin;
  double max_qber = 0.11;
  // Upper bound for the value substituted when the sample shows no errors.
  double zero_qber_floor = 0.005;
  int cascade_passes = 4;
  int cascade_max_passes = 8;
  // Stop after sifting (fraction and QBER studies).
  bool sift_only = false;

  void validate() const;
  bool operator==(const DistillOptions&) const = default;
};

// QBER used for block sizing and the length formula. A zero estimate is
// replaced by min(zero_qber_floor, 3 / sample_size), the one-sided 95% upper
// bound for zero observed errors.
double effective_qber(double estimate, std::size_t sample_size, double zero_qber_floor);

struct SessionResult {
  KeyMaterial key_a;
  KeyMaterial key_b;
  SessionTranscript transcript;

  bool completed() const noexcept { return !transcript.aborted; }
};

// Sampling, error correction and privacy amplification between two sifted
// keys. Aborts are recorded in result.transcript rather than thrown.
void distill(const KeyMaterial& sifted_a, const KeyMaterial& sifted_b,
             const DistillOptions& options, Rng& rng, SessionResult& result);

struct Bb84Config {
  ChannelParams channel;
  std::optional<InterceptResendConfig> adversary;
  std::uint64_t pulses = 100000;
  DistillOptions distill;
};

SessionResult run_bb84(const Bb84Config& config, Rng& rng, const std::string& session_id = "bb84");

}  // namespace qkdnet
