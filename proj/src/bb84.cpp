#include "qkdnet/bb84.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "qkdnet/errors.hpp"

namespace qkdnet {

std::string_view to_string(Basis basis) noexcept {
  return basis == Basis::sigma_x ? "x" : "y";
}

std::vector<QubitSymbol> prepare_sequence(std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("prepare_sequence: empty sequence requested");
  std::vector<QubitSymbol> out(n);
  for (auto& s : out) {
    s.bit = rng.bit();
    s.basis = random_basis(rng);
  }
  return out;
}

std::uint8_t measure_symbol(const QubitSymbol& sent, Basis receiver, ClickOrigin origin,
                            double e_optical, Rng& rng) {
  if (origin == ClickOrigin::dark || receiver != sent.basis) return rng.bit();
  return static_cast<std::uint8_t>(sent.bit ^ (rng.bernoulli(e_optical) ? 1U : 0U));
}

std::vector<Measurement> measure_sequence(std::span<const QubitSymbol> symbols,
                                          std::span<const Basis> receiver_bases,
                                          const ChannelParams& channel, Rng& rng) {
  if (symbols.size() != receiver_bases.size()) {
    throw ProtocolDesyncError("measure_sequence: one receiver basis per symbol required");
  }
  std::vector<Measurement> out(symbols.size());
  for (const auto& ev : sample_detections(channel, symbols.size(), rng)) {
    const auto i = static_cast<std::size_t>(ev.pulse);
    const Basis b = receiver_bases[i];
    out[i] = QubitSymbol{measure_symbol(symbols[i], b, ev.origin, channel.e_optical, rng), b};
  }
  return out;
}

std::vector<Measurement> measure_sequence(std::span<const QubitSymbol> symbols,
                                          const ChannelParams& channel, Rng& rng) {
  std::vector<Basis> bases(symbols.size());
  for (auto& b : bases) b = random_basis(rng);
  return measure_sequence(symbols, bases, channel, rng);
}

SiftResult sift(std::span<const QubitSymbol> sent, std::span<const Measurement> received,
                std::string_view session) {
  if (sent.size() != received.size()) {
    throw ProtocolDesyncError("sift: sender has " + std::to_string(sent.size()) +
                              " positions, receiver " + std::to_string(received.size()));
  }
  SiftResult r;
  Bits a, b;
  for (std::size_t i = 0; i < sent.size(); ++i) {
    const auto& m = received[i];
    if (!m || m->basis != sent[i].basis) continue;
    r.kept.push_back(i);
    a.push_back(sent[i].bit);
    b.push_back(m->bit);
  }
  r.key_a = KeyMaterial(std::move(a), KeyStage::sifted, std::string(session));
  r.key_b = KeyMaterial(std::move(b), KeyStage::sifted, std::string(session));
  return r;
}

QberEstimate estimate_qber(const KeyMaterial& key_a, const KeyMaterial& key_b,
                           double sample_fraction, Rng& rng) {
  if (!(sample_fraction > 0 && sample_fraction < 1)) {
    throw std::invalid_argument("estimate_qber: sample_fraction must be in (0, 1)");
  }
  if (key_a.size() != key_b.size()) {
    throw ProtocolDesyncError("estimate_qber: keys differ in length");
  }
  const std::size_t n = key_a.size();
  const auto m = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(sample_fraction * static_cast<double>(n))));
  if (m >= n) {
    throw InsufficientKeyError("estimate_qber: sampling " + std::to_string(m) + " of " +
                               std::to_string(n) + " bits would exhaust the key");
  }

  // Partial Fisher-Yates: the first m slots become the sample.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < m; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<std::size_t> sample(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(sample.begin(), sample.end());

  QberEstimate est;
  std::vector<char> in_sample(n, 0);
  for (auto p : sample) {
    in_sample[p] = 1;
    est.mismatches += (key_a.bits()[p] != key_b.bits()[p]) ? 1 : 0;
  }
  Bits ra, rb;
  ra.reserve(n - m);
  rb.reserve(n - m);
  for (std::size_t i = 0; i < n; ++i) {
    if (in_sample[i]) continue;
    ra.push_back(key_a.bits()[i]);
    rb.push_back(key_b.bits()[i]);
  }
  est.sample_size = m;
  est.estimate = static_cast<double>(est.mismatches) / static_cast<double>(m);
  est.sample_positions = std::move(sample);
  est.remaining_a = key_a.shrink(std::move(ra));
  est.remaining_b = key_b.shrink(std::move(rb));
  return est;
}

}  // namespace qkdnet
