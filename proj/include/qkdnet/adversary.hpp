#pragma once

// Intercept-resend eavesdropper: measure in a random basis, resend what was
// seen. Also the behavioural model of a trusted relay that measures and
// re-prepares.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "qkdnet/bb84.hpp"
#include "qkdnet/random.hpp"

namespace qkdnet {

enum class BasisStrategy : std::uint8_t { uniform_random };

struct InterceptResendConfig {
  double intercept_fraction = 1.0;
  BasisStrategy basis_strategy = BasisStrategy::uniform_random;

  void validate() const;  // throws std::invalid_argument
  bool operator==(const InterceptResendConfig&) const = default;
};

struct InterceptResult {
  std::vector<QubitSymbol> resent;
  // Adversary's measurement per position (nullopt = passed through).
  std::vector<std::optional<QubitSymbol>> record;
  std::size_t attacked = 0;
};

// Attacks one symbol in place; returns the adversary's record if attacked.
std::optional<QubitSymbol> intercept_symbol(QubitSymbol& symbol, const InterceptResendConfig& config,
                                            Rng& rng);

InterceptResult intercept_resend(std::span<const QubitSymbol> symbols,
                                 const InterceptResendConfig& config, Rng& rng);

// The adversary knows a sent bit with certainty iff it attacked the position
// in the sender's basis.
inline bool adversary_knows(const std::optional<QubitSymbol>& record, const QubitSymbol& sent) {
  return record && record->basis == sent.basis;
}

}  // namespace qkdnet
