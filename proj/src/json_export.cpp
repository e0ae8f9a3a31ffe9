#include "qkdnet/json_export.hpp"

namespace qkdnet {

nlohmann::ordered_json to_json(const ChannelParams& c) {
  return {{"mu", c.mu},         {"nu", c.nu},         {"q_factor", c.q_factor},
          {"length_km", c.length_km}, {"loss_db", c.loss_db}, {"eta_d", c.eta_d},
          {"p_dark", c.p_dark}, {"e_optical", c.e_optical}};
}

nlohmann::ordered_json to_json(const SessionTranscript& t, bool include_sequences) {
  nlohmann::ordered_json j;
  j["schema"] = kTranscriptSchema;
  j["session_id"] = t.session_id;
  j["protocol"] = t.protocol;
  j["seed"] = t.seed;
  j["pulses_sent"] = t.pulses_sent;
  j["detected"] = t.detected;
  j["lengths"] = {{"raw", t.lengths.raw},
                  {"sifted", t.lengths.sifted},
                  {"sampled", t.lengths.sampled},
                  {"corrected", t.lengths.corrected},
                  {"final", t.lengths.final}};
  j["sifted_fraction"] = t.sifted_fraction();
  j["sifted_qber"] = t.sifted_qber;
  j["sample_mismatches"] = t.sample_mismatches;
  j["measured_qber"] = t.measured_qber;
  j["effective_qber"] = t.effective_qber;
  j["leaked_bits"] = t.leaked_bits;
  j["verification_bits"] = t.verification_bits;
  j["reconciliation_passes"] = t.reconciliation_passes;
  j["amplification_seed"] = t.amplification_seed;
  j["aborted"] = t.aborted;
  j["abort_reason"] = t.abort_reason;
  j["no_key_distillable"] = t.no_key_distillable;
  j["keys_match"] = t.keys_match;

  auto knowledge = nlohmann::ordered_json::array();
  for (const auto& k : t.knowledge) {
    knowledge.push_back(
        {{"node", k.node}, {"role", k.role}, {"known_bits", k.known_bits}, {"sifted_bits", k.sifted_bits}});
  }
  j["knowledge"] = std::move(knowledge);

  auto hops = nlohmann::ordered_json::array();
  for (const auto& h : t.hops) {
    hops.push_back({{"from", h.from},
                    {"to", h.to},
                    {"message_bits", h.message_bits},
                    {"key_bits_used", h.key_bits_used},
                    {"decoded_ok", h.decoded_ok}});
  }
  j["hops"] = std::move(hops);

  auto eves = nlohmann::ordered_json::array();
  for (const auto& a : t.adversaries) {
    eves.push_back({{"link", a.link}, {"attacked", a.attacked}, {"known_sifted", a.known_sifted}});
  }
  j["adversaries"] = std::move(eves);

  if (t.basis_classes) {
    j["basis_classes"] = {{"secret_key", t.basis_classes->secret_key},
                          {"partial_secret_key", t.basis_classes->partial_secret_key},
                          {"no_secret_key", t.basis_classes->no_secret_key}};
  }

  if (include_sequences) {
    std::string a, b;
    for (auto x : t.bases_a) a += to_string(x);
    for (auto x : t.bases_b) b += to_string(x);
    j["detected_pulses"] = t.detected_pulses;
    j["bases_a"] = a;
    j["bases_b"] = b;
    j["kept_positions"] = t.kept_positions;
    j["sample_positions"] = t.sample_positions;
  }
  return j;
}

}  // namespace qkdnet
