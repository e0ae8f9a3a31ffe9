#include "qkdnet/session.hpp"

#include <algorithm>
#include <stdexcept>

#include "qkdnet/bb84.hpp"
#include "qkdnet/cascade.hpp"
#include "qkdnet/classical_channel.hpp"
#include "qkdnet/errors.hpp"

namespace qkdnet {

void DistillOptions::validate() const {
  if (!(sample_fraction > 0 && sample_fraction < 1)) {
    throw std::invalid_argument("distill: sample_fraction must be in (0, 1)");
  }
  if (!(max_qber > 0 && max_qber < 0.5)) throw std::invalid_argument("distill: max_qber must be in (0, 0.5)");
  if (!(zero_qber_floor > 0 && zero_qber_floor < 0.5)) {
    throw std::invalid_argument("distill: zero_qber_floor must be in (0, 0.5)");
  }
  if (cascade_passes < 1 || cascade_max_passes < cascade_passes) {
    throw std::invalid_argument("distill: need 1 <= cascade_passes <= cascade_max_passes");
  }
}

double effective_qber(double estimate, std::size_t sample_size, double zero_qber_floor) {
  if (estimate > 0) return estimate;
  if (sample_size == 0) return zero_qber_floor;
  return std::min(zero_qber_floor, 3.0 / static_cast<double>(sample_size));
}

void distill(const KeyMaterial& sifted_a, const KeyMaterial& sifted_b,
             const DistillOptions& options, Rng& rng, SessionResult& result) {
  auto& t = result.transcript;
  result.key_a = sifted_a;
  result.key_b = sifted_b;
  t.lengths.sifted = sifted_a.size();
  t.sifted_qber = sifted_a.empty() ? 0.0
                                   : static_cast<double>(hamming_distance(sifted_a.bits(), sifted_b.bits())) /
                                         static_cast<double>(sifted_a.size());
  t.keys_match = sifted_a.bits() == sifted_b.bits();
  if (options.sift_only) return;

  auto abort = [&](std::string reason) {
    t.aborted = true;
    t.abort_reason = std::move(reason);
    t.keys_match = false;
  };

  QberEstimate est;
  try {
    est = estimate_qber(sifted_a, sifted_b, options.sample_fraction, rng);
  } catch (const InsufficientKeyError&) {
    abort("insufficient-key");
    return;
  }
  t.sample_positions = est.sample_positions;
  t.lengths.sampled = est.sample_size;
  t.sample_mismatches = est.mismatches;
  t.measured_qber = est.estimate;
  t.effective_qber = effective_qber(est.estimate, est.sample_size, options.zero_qber_floor);
  result.key_a = est.remaining_a;
  result.key_b = est.remaining_b;

  ClassicalChannel channel;
  CascadeOptions cascade;
  cascade.qber_estimate = t.effective_qber;
  cascade.max_qber = options.max_qber;
  cascade.passes = options.cascade_passes;
  cascade.max_passes = options.cascade_max_passes;
  Reconciliation rec;
  try {
    rec = error_correct(est.remaining_a, est.remaining_b, channel, cascade, rng);
  } catch (const SessionAborted& e) {
    t.leaked_bits = channel.bits("parity");
    t.verification_bits = channel.bits("verification");
    abort(e.reason());
    return;
  }
  t.leaked_bits = rec.leaked_bits;
  t.verification_bits = rec.verification_bits;
  t.reconciliation_passes = rec.passes_run;
  t.lengths.corrected = rec.corrected_a.size();

  t.amplification_seed = rng.next();
  const std::size_t disclosed = rec.leaked_bits + rec.verification_bits;
  result.key_a = privacy_amplify(rec.corrected_a, t.effective_qber, disclosed, t.amplification_seed,
                                 options.security_margin);
  result.key_b = privacy_amplify(rec.corrected_b, t.effective_qber, disclosed, t.amplification_seed,
                                 options.security_margin);
  t.lengths.final = result.key_a.size();
  t.no_key_distillable = result.key_a.empty();
  t.keys_match = result.key_a.bits() == result.key_b.bits();
  if (!t.keys_match) abort("final-key-mismatch");
}

SessionResult run_bb84(const Bb84Config& config, Rng& rng, const std::string& session_id) {
  config.channel.validate();
  config.distill.validate();
  if (config.adversary) config.adversary->validate();

  SessionResult result;
  auto& t = result.transcript;
  t.session_id = session_id;
  t.protocol = "bb84";
  t.pulses_sent = config.pulses;
  t.lengths.raw = config.pulses;

  const auto events = sample_detections(config.channel, config.pulses, rng);
  const std::size_t k = events.size();
  t.detected = k;

  std::vector<QubitSymbol> sent;
  if (k > 0) sent = prepare_sequence(k, rng);
  std::vector<Measurement> received(k);
  std::vector<std::optional<QubitSymbol>> eve(k);
  t.detected_pulses.reserve(k);
  t.bases_a.reserve(k);
  t.bases_b.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    QubitSymbol in_flight = sent[i];
    if (config.adversary) eve[i] = intercept_symbol(in_flight, *config.adversary, rng);
    const Basis b = random_basis(rng);
    received[i] = QubitSymbol{
        measure_symbol(in_flight, b, events[i].origin, config.channel.e_optical, rng), b};
    t.detected_pulses.push_back(events[i].pulse);
    t.bases_a.push_back(sent[i].basis);
    t.bases_b.push_back(b);
  }

  SiftResult s = sift(sent, received, session_id);
  t.kept_positions = s.kept;
  if (config.adversary) {
    AdversaryStats stats{"a-b", 0, 0};
    for (std::size_t i = 0; i < k; ++i) stats.attacked += eve[i] ? 1 : 0;
    for (auto i : s.kept) stats.known_sifted += adversary_knows(eve[i], sent[i]) ? 1 : 0;
    t.adversaries.push_back(stats);
    t.knowledge.push_back({"eavesdropper", "adversary", stats.known_sifted, s.kept.size()});
  }

  distill(s.key_a, s.key_b, config.distill, rng, result);
  return result;
}

}  // namespace qkdnet
