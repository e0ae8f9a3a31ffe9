#pragma once

// Key distribution across the cellular network: base-station-sourced
// sharing (single cell and chained) and the multi-hop XOR relay.

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qkdnet/bb84.hpp"
#include "qkdnet/key.hpp"
#include "qkdnet/random.hpp"
#include "qkdnet/session.hpp"
#include "qkdnet/topology.hpp"

namespace qkdnet {

enum class BasisAgreement : std::uint8_t { secret_key, partial_secret_key, no_secret_key };

std::string_view to_string(BasisAgreement agreement) noexcept;

// All three equal -> secret key; QBS agrees with exactly one client ->
// partial secret key; clients agree with each other but not the QBS -> none.
BasisAgreement classify_bases(Basis qnc1, Basis qbs, Basis qnc2) noexcept;

// Two clients of one cell share a key sourced by their QBS. The QBS sends
// the same (bit, basis) sequence to both; a position survives sifting only
// when all three bases agree. Throws RoutingError if the clients are in
// different cells.
SessionResult protocol_a(const Topology& topology, std::string_view qnc1, std::string_view qnc2,
                         std::uint64_t pulses, const DistillOptions& options, Rng& rng);

// Base-station sourcing over a chain of n_qbs stations: the first station
// prepares, every further station measures in a random basis and
// re-prepares. Expected sifted fraction 2^-(n_qbs + 1).
//
// n_qbs = 0 means plain BB84 between two clients of one cell, with the QBS
// acting as a passive junction (the two access fibers concatenated).
// Otherwise the route between the clients' cells must contain exactly n_qbs
// stations; throws RoutingError if not.
SessionResult protocol_a_chain(const Topology& topology, std::string_view qnc1,
                               std::string_view qnc2, std::size_t n_qbs, std::uint64_t pulses,
                               const DistillOptions& options, Rng& rng);

// XOR masking; the relay's one-time-pad primitive.
Bits one_time_pad(std::span<const std::uint8_t> message, std::span<const std::uint8_t> key);

// Pairwise keys shared by adjacent base stations. Each pool is consumed
// front to back and bits are never handed out twice.
class KeyBank {
 public:
  void deposit(std::string_view a, std::string_view b, std::span<const std::uint8_t> bits);
  std::size_t available(std::string_view a, std::string_view b) const;
  std::size_t consumed(std::string_view a, std::string_view b) const;

  // Draws `bits` fresh bits from every listed pool. All-or-nothing: on
  // shortage nothing is consumed and nullopt is returned.
  std::optional<std::vector<Bits>> draw_all(std::span<const NodePair> links, std::size_t bits);

 private:
  struct Pool {
    Bits bits;
    std::size_t cursor = 0;
  };
  static NodePair key_of(std::string_view a, std::string_view b);

  mutable std::mutex mutex_;
  std::map<NodePair, Pool> pools_;
};

struct ProvisionOptions {
  std::uint64_t pulses_per_session = 100000;
  std::size_t max_sessions_per_link = 1000;
  DistillOptions distill;
};

struct ProvisionReport {
  NodePair link;
  std::size_t sessions = 0;
  std::size_t aborted = 0;
  std::size_t bits = 0;
};

// Runs BB84 sessions on every hop of `route` until each pool holds at least
// `bits_per_link` unused bits. Throws KeyExhaustedError if a link cannot get
// there within max_sessions_per_link sessions.
std::vector<ProvisionReport> provision_pairwise_keys(const Topology& topology,
                                                     const std::vector<std::string>& route,
                                                     std::size_t bits_per_link,
                                                     const ProvisionOptions& options, KeyBank& bank,
                                                     Rng& rng);

// Number of pad bits one relay hop consumes for `pulses` raw positions
// (bit and basis per position).
constexpr std::size_t relay_message_bits(std::uint64_t pulses) noexcept {
  return static_cast<std::size_t>(2 * pulses);
}

// Multi-hop trusted relay. The first station on the route prepares raw
// symbols R (bit and basis per position), sends them to qnc1, and forwards
// R over the classical channel masked hop by hop with the pairwise keys. The
// last station re-prepares the identical symbols for qncN. Sifting and
// distillation then run between the two clients, so the expected sifted
// fraction does not depend on the number of stations.
//
// Key exhaustion is recorded as an abort ("key-exhausted") and leaves the
// bank untouched. Throws RoutingError if no route exists.
SessionResult protocol_b(const Topology& topology, std::string_view qnc1, std::string_view qncN,
                         std::uint64_t pulses, const DistillOptions& options, KeyBank& bank,
                         Rng& rng);

// As above, provisioning exactly the needed pairwise key first.
SessionResult protocol_b(const Topology& topology, std::string_view qnc1, std::string_view qncN,
                         std::uint64_t pulses, const DistillOptions& options, Rng& rng,
                         const ProvisionOptions& provision = {});

}  // namespace qkdnet
