#include "qkdnet/adversary.hpp"

#include <stdexcept>

namespace qkdnet {

void InterceptResendConfig::validate() const {
  if (!(intercept_fraction >= 0 && intercept_fraction <= 1)) {
    throw std::invalid_argument("adversary: intercept_fraction must be in [0, 1]");
  }
}

std::optional<QubitSymbol> intercept_symbol(QubitSymbol& symbol, const InterceptResendConfig& config,
                                            Rng& rng) {
  if (!rng.bernoulli(config.intercept_fraction)) return std::nullopt;
  const Basis basis = random_basis(rng);
  // The adversary's own detector is ideal.
  const std::uint8_t bit = measure_symbol(symbol, basis, ClickOrigin::signal, 0.0, rng);
  symbol = QubitSymbol{bit, basis};
  return symbol;
}

InterceptResult intercept_resend(std::span<const QubitSymbol> symbols,
                                 const InterceptResendConfig& config, Rng& rng) {
  config.validate();
  InterceptResult out;
  out.resent.assign(symbols.begin(), symbols.end());
  out.record.resize(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    out.record[i] = intercept_symbol(out.resent[i], config, rng);
    if (out.record[i]) ++out.attacked;
  }
  return out;
}

}  // namespace qkdnet
