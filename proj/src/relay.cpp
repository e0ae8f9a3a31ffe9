#include "qkdnet/relay.hpp"

#include <algorithm>
#include <stdexcept>

#include "qkdnet/adversary.hpp"
#include "qkdnet/classical_channel.hpp"
#include "qkdnet/errors.hpp"

namespace qkdnet {

namespace {

// One quantum hop: transmission over `channel` to `receiver`, with
// eavesdroppers (if any) acting before the receiver's detector.
struct Hop {
  std::string sender;
  std::string receiver;
  ChannelParams channel;
  std::vector<InterceptResendConfig> adversaries;
};

Hop hop_over(const Topology& topology, const std::string& from, const std::string& to) {
  const QuantumLink& link = topology.quantum_link(from, to);
  Hop h{from, to, link.channel, {}};
  if (link.adversary) h.adversaries.push_back(*link.adversary);
  return h;
}

// Surviving pulses of a multi-hop branch with the click origin at every hop.
struct Branch {
  std::vector<std::uint64_t> pulses;
  std::vector<std::vector<ClickOrigin>> origins;  // [hop][survivor]
};

Branch detect_branch(const std::vector<Hop>& hops, std::uint64_t pulses, Rng& rng) {
  Branch br;
  for (std::size_t h = 0; h < hops.size(); ++h) {
    const std::uint64_t population = h == 0 ? pulses : br.pulses.size();
    const auto events = sample_detections(hops[h].channel, population, rng);
    std::vector<std::uint64_t> next;
    next.reserve(events.size());
    std::vector<std::vector<ClickOrigin>> origins(h + 1);
    for (auto& o : origins) o.reserve(events.size());
    for (const auto& ev : events) {
      const auto idx = static_cast<std::size_t>(ev.pulse);
      next.push_back(h == 0 ? ev.pulse : br.pulses[idx]);
      for (std::size_t p = 0; p < h; ++p) origins[p].push_back(br.origins[p][idx]);
      origins[h].push_back(ev.origin);
    }
    br.pulses = std::move(next);
    br.origins = std::move(origins);
  }
  return br;
}

// Carries one symbol through a branch: eavesdroppers act, then the
// receiver measures in a random basis and (if not the last) re-prepares.
struct BranchOutcome {
  QubitSymbol received;            // last receiver's record
  bool all_bases_match = true;     // every receiver used the source basis
  std::vector<bool> adversary_knows;
};

struct ChainPlan {
  std::string protocol;
  std::string source;
  std::vector<Hop> branch_a;  // empty: the source itself is party A
  std::vector<Hop> branch_b;  // non-empty
  std::vector<std::string> relays;          // re-preparing stations (role "relay")
  std::vector<std::string> classical_relays;  // stations that learn R classically
  bool classify_triples = false;
};

SessionResult run_chain(const ChainPlan& plan, std::uint64_t pulses, const DistillOptions& options,
                        const std::vector<QubitSymbol>* prepared, Rng& rng,
                        SessionResult result = {}) {
  options.validate();
  auto& t = result.transcript;
  t.protocol = plan.protocol;
  t.pulses_sent = pulses;
  t.lengths.raw = pulses;

  const Branch a = detect_branch(plan.branch_a, pulses, rng);
  const Branch b = detect_branch(plan.branch_b, pulses, rng);

  // Positions both endpoints detected, with indices into each branch.
  std::vector<std::uint64_t> joint;
  std::vector<std::size_t> ia, ib;
  if (plan.branch_a.empty()) {
    joint = b.pulses;
    ib.resize(joint.size());
    for (std::size_t i = 0; i < ib.size(); ++i) ib[i] = i;
  } else {
    std::size_t i = 0, j = 0;
    while (i < a.pulses.size() && j < b.pulses.size()) {
      if (a.pulses[i] < b.pulses[j]) {
        ++i;
      } else if (b.pulses[j] < a.pulses[i]) {
        ++j;
      } else {
        joint.push_back(a.pulses[i]);
        ia.push_back(i++);
        ib.push_back(j++);
      }
    }
  }
  const std::size_t k = joint.size();
  t.detected = k;

  // Adversary bookkeeping per hop carrying an eavesdropper.
  struct EveSlot {
    std::string link;
    std::size_t branch_hop;
    bool on_a;
    AdversaryStats stats;
  };
  std::vector<EveSlot> eves;
  for (std::size_t h = 0; h < plan.branch_a.size(); ++h) {
    if (!plan.branch_a[h].adversaries.empty()) {
      eves.push_back({plan.branch_a[h].sender + "-" + plan.branch_a[h].receiver, h, true, {}});
    }
  }
  for (std::size_t h = 0; h < plan.branch_b.size(); ++h) {
    if (!plan.branch_b[h].adversaries.empty()) {
      eves.push_back({plan.branch_b[h].sender + "-" + plan.branch_b[h].receiver, h, false, {}});
    }
  }

  BasisClassCounts classes;
  std::vector<QubitSymbol> source(k);
  Bits bits_a, bits_b;
  t.detected_pulses = joint;
  t.bases_a.reserve(k);
  t.bases_b.reserve(k);

  for (std::size_t p = 0; p < k; ++p) {
    if (prepared) {
      source[p] = (*prepared)[static_cast<std::size_t>(joint[p])];
    } else {
      source[p] = QubitSymbol{rng.bit(), random_basis(rng)};
    }
    const QubitSymbol& s = source[p];

    auto carry = [&](const std::vector<Hop>& hops, const Branch& br, std::size_t idx, bool on_a) {
      QubitSymbol in_flight = s;
      bool match = true;
      std::vector<bool> knows;
      for (std::size_t h = 0; h < hops.size(); ++h) {
        bool eve_knows = false;
        for (const auto& cfg : hops[h].adversaries) {
          const QubitSymbol before = in_flight;
          auto rec = intercept_symbol(in_flight, cfg, rng);
          // Knowledge is relative to the source symbol; an intercept after a
          // mismatched relay measurement knows only the relay's value.
          eve_knows = eve_knows || (rec && adversary_knows(rec, before) && before == s);
          for (auto& e : eves) {
            if (e.on_a == on_a && e.branch_hop == h && rec) ++e.stats.attacked;
          }
        }
        if (!hops[h].adversaries.empty()) knows.push_back(eve_knows);
        const Basis r = random_basis(rng);
        const std::uint8_t bit =
            measure_symbol(in_flight, r, br.origins[h][idx], hops[h].channel.e_optical, rng);
        match = match && r == s.basis;
        in_flight = QubitSymbol{bit, r};
      }
      return BranchOutcome{in_flight, match, std::move(knows)};
    };

    BranchOutcome out_a{s, true, {}};
    if (!plan.branch_a.empty()) out_a = carry(plan.branch_a, a, ia[p], true);
    const BranchOutcome out_b = carry(plan.branch_b, b, ib[p], false);

    t.bases_a.push_back(out_a.received.basis);
    t.bases_b.push_back(out_b.received.basis);
    if (plan.classify_triples) {
      switch (classify_bases(out_a.received.basis, s.basis, out_b.received.basis)) {
        case BasisAgreement::secret_key: ++classes.secret_key; break;
        case BasisAgreement::partial_secret_key: ++classes.partial_secret_key; break;
        case BasisAgreement::no_secret_key: ++classes.no_secret_key; break;
      }
    }
    if (out_a.all_bases_match && out_b.all_bases_match) {
      t.kept_positions.push_back(p);
      bits_a.push_back(out_a.received.bit);
      bits_b.push_back(out_b.received.bit);
      std::size_t ka = 0, kb = 0;
      for (auto& e : eves) {
        const bool knows = e.on_a ? out_a.adversary_knows[ka++] : out_b.adversary_knows[kb++];
        if (knows) ++e.stats.known_sifted;
      }
    }
  }

  const std::size_t sifted = bits_a.size();
  if (plan.classify_triples) t.basis_classes = classes;
  if (!plan.branch_a.empty() || !plan.relays.empty()) {
    // The source prepared every position; it knows all sifted bits.
    t.knowledge.push_back({plan.source, "source", sifted, sifted});
  }
  // Re-preparing stations measured every sifted position in the source basis.
  for (const auto& r : plan.relays) t.knowledge.push_back({r, "relay", sifted, sifted});
  for (const auto& r : plan.classical_relays) t.knowledge.push_back({r, "relay", sifted, sifted});
  for (auto& e : eves) {
    e.stats.link = e.link;
    t.adversaries.push_back(e.stats);
    t.knowledge.push_back({"eavesdropper@" + e.link, "adversary", e.stats.known_sifted, sifted});
  }

  const std::string& sid = t.session_id;
  KeyMaterial key_a(std::move(bits_a), KeyStage::sifted, sid);
  KeyMaterial key_b(std::move(bits_b), KeyStage::sifted, sid);
  distill(key_a, key_b, options, rng, result);
  return result;
}

void require_client(const Topology& topology, std::string_view id) {
  if (!topology.has_node(id)) throw std::invalid_argument("unknown node '" + std::string(id) + "'");
  if (topology.node(id).kind != NodeKind::qnc) {
    throw std::invalid_argument("'" + std::string(id) + "' is not a QNC");
  }
}

SessionResult with_id(std::string_view protocol) {
  SessionResult r;
  r.transcript.session_id = std::string(protocol);
  return r;
}

}  // namespace

std::string_view to_string(BasisAgreement agreement) noexcept {
  switch (agreement) {
    case BasisAgreement::secret_key: return "secret_key";
    case BasisAgreement::partial_secret_key: return "partial_secret_key";
    case BasisAgreement::no_secret_key: return "no_secret_key";
  }
  return "unknown";
}

BasisAgreement classify_bases(Basis qnc1, Basis qbs, Basis qnc2) noexcept {
  if (qnc1 == qbs && qbs == qnc2) return BasisAgreement::secret_key;
  if (qnc1 == qbs || qnc2 == qbs) return BasisAgreement::partial_secret_key;
  return BasisAgreement::no_secret_key;
}

SessionResult protocol_a_chain(const Topology& topology, std::string_view qnc1,
                               std::string_view qnc2, std::size_t n_qbs, std::uint64_t pulses,
                               const DistillOptions& options, Rng& rng) {
  require_client(topology, qnc1);
  require_client(topology, qnc2);
  if (qnc1 == qnc2) throw std::invalid_argument("protocol_a_chain: endpoints must differ");
  const std::string& cell1 = topology.cell_of(qnc1);
  const std::string& cell2 = topology.cell_of(qnc2);

  ChainPlan plan;
  plan.protocol = "protocol_a_chain";
  if (n_qbs == 0) {
    if (cell1 != cell2) throw RoutingError("n_qbs = 0 requires both clients in one cell");
    const std::string& qbs = topology.qbs_of_cell(cell1);
    const Hop in = hop_over(topology, std::string(qnc1), qbs);
    Hop out = hop_over(topology, qbs, std::string(qnc2));
    Hop through{std::string(qnc1), std::string(qnc2), out.channel, in.adversaries};
    through.channel.loss_db = in.channel.loss_db + out.channel.loss_db;
    through.channel.length_km = in.channel.length_km + out.channel.length_km;
    through.adversaries.insert(through.adversaries.end(), out.adversaries.begin(), out.adversaries.end());
    plan.source = std::string(qnc1);
    plan.branch_b.push_back(std::move(through));
  } else {
    const auto path = topology.route(cell1, cell2);
    if (path.size() != n_qbs) {
      throw RoutingError("route between '" + cell1 + "' and '" + cell2 + "' has " +
                         std::to_string(path.size()) + " QBSs, requested " + std::to_string(n_qbs));
    }
    plan.source = path.front();
    plan.branch_a.push_back(hop_over(topology, path.front(), std::string(qnc1)));
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      plan.branch_b.push_back(hop_over(topology, path[i], path[i + 1]));
      plan.relays.push_back(path[i + 1]);
    }
    plan.branch_b.push_back(hop_over(topology, path.back(), std::string(qnc2)));
    plan.classify_triples = n_qbs == 1;
  }
  return run_chain(plan, pulses, options, nullptr, rng, with_id(plan.protocol));
}

SessionResult protocol_a(const Topology& topology, std::string_view qnc1, std::string_view qnc2,
                         std::uint64_t pulses, const DistillOptions& options, Rng& rng) {
  require_client(topology, qnc1);
  require_client(topology, qnc2);
  if (topology.cell_of(qnc1) != topology.cell_of(qnc2)) {
    throw RoutingError("protocol_a: clients in different cells; use protocol_a_chain or protocol_b");
  }
  SessionResult r = protocol_a_chain(topology, qnc1, qnc2, 1, pulses, options, rng);
  r.transcript.protocol = "protocol_a";
  r.transcript.session_id = "protocol_a";
  return r;
}

Bits one_time_pad(std::span<const std::uint8_t> message, std::span<const std::uint8_t> key) {
  return xor_bits(message, key);
}

NodePair KeyBank::key_of(std::string_view a, std::string_view b) {
  return a < b ? NodePair{std::string(a), std::string(b)} : NodePair{std::string(b), std::string(a)};
}

void KeyBank::deposit(std::string_view a, std::string_view b, std::span<const std::uint8_t> bits) {
  std::lock_guard lock(mutex_);
  auto& pool = pools_[key_of(a, b)];
  pool.bits.insert(pool.bits.end(), bits.begin(), bits.end());
}

std::size_t KeyBank::available(std::string_view a, std::string_view b) const {
  std::lock_guard lock(mutex_);
  auto it = pools_.find(key_of(a, b));
  return it == pools_.end() ? 0 : it->second.bits.size() - it->second.cursor;
}

std::size_t KeyBank::consumed(std::string_view a, std::string_view b) const {
  std::lock_guard lock(mutex_);
  auto it = pools_.find(key_of(a, b));
  return it == pools_.end() ? 0 : it->second.cursor;
}

std::optional<std::vector<Bits>> KeyBank::draw_all(std::span<const NodePair> links, std::size_t bits) {
  std::lock_guard lock(mutex_);
  std::map<NodePair, std::size_t> need;
  for (const auto& l : links) need[key_of(l.first, l.second)] += bits;
  for (const auto& [key, n] : need) {
    auto it = pools_.find(key);
    if (it == pools_.end() || it->second.bits.size() - it->second.cursor < n) return std::nullopt;
  }
  std::vector<Bits> out;
  out.reserve(links.size());
  for (const auto& l : links) {
    auto& pool = pools_.at(key_of(l.first, l.second));
    const auto first = pool.bits.begin() + static_cast<std::ptrdiff_t>(pool.cursor);
    out.emplace_back(first, first + static_cast<std::ptrdiff_t>(bits));
    pool.cursor += bits;
  }
  return out;
}

std::vector<ProvisionReport> provision_pairwise_keys(const Topology& topology,
                                                     const std::vector<std::string>& route,
                                                     std::size_t bits_per_link,
                                                     const ProvisionOptions& options, KeyBank& bank,
                                                     Rng& rng) {
  std::vector<ProvisionReport> reports;
  for (std::size_t i = 0; i + 1 < route.size(); ++i) {
    const QuantumLink& link = topology.quantum_link(route[i], route[i + 1]);
    ProvisionReport rep{{route[i], route[i + 1]}, 0, 0, 0};
    Bb84Config cfg{link.channel, link.adversary, options.pulses_per_session, options.distill};
    while (bank.available(route[i], route[i + 1]) < bits_per_link) {
      if (rep.sessions >= options.max_sessions_per_link) {
        throw KeyExhaustedError("provisioning " + route[i] + "-" + route[i + 1] + ": " +
                                std::to_string(bank.available(route[i], route[i + 1])) + " of " +
                                std::to_string(bits_per_link) + " bits after " +
                                std::to_string(rep.sessions) + " sessions");
      }
      SessionResult s = run_bb84(cfg, rng, "pairwise-" + route[i] + "-" + route[i + 1]);
      ++rep.sessions;
      if (!s.completed()) {
        ++rep.aborted;
        continue;
      }
      bank.deposit(route[i], route[i + 1], s.key_a.bits());
      rep.bits += s.key_a.size();
    }
    reports.push_back(rep);
  }
  return reports;
}

SessionResult protocol_b(const Topology& topology, std::string_view qnc1, std::string_view qncN,
                         std::uint64_t pulses, const DistillOptions& options, KeyBank& bank,
                         Rng& rng) {
  require_client(topology, qnc1);
  require_client(topology, qncN);
  if (qnc1 == qncN) throw std::invalid_argument("protocol_b: endpoints must differ");
  if (pulses == 0) throw std::invalid_argument("protocol_b: pulses must be > 0");
  const auto path = topology.route(topology.cell_of(qnc1), topology.cell_of(qncN));
  std::vector<NodePair> hops;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (!topology.has_classical_link(path[i], path[i + 1])) {
      throw RoutingError("no classical link between '" + path[i] + "' and '" + path[i + 1] + "'");
    }
    hops.emplace_back(path[i], path[i + 1]);
  }

  SessionResult result = with_id("protocol_b");
  auto& t = result.transcript;
  t.protocol = "protocol_b";
  t.pulses_sent = pulses;
  t.lengths.raw = pulses;

  const std::size_t message_bits = relay_message_bits(pulses);
  auto pads = bank.draw_all(hops, message_bits);
  if (!pads) {
    t.aborted = true;
    t.abort_reason = "key-exhausted";
    return result;
  }

  // QBS_1 prepares R; its classical encoding is (bit, basis) per position.
  const std::vector<QubitSymbol> raw = prepare_sequence(static_cast<std::size_t>(pulses), rng);
  Bits message(message_bits);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    message[2 * i] = raw[i].bit;
    message[2 * i + 1] = static_cast<std::uint8_t>(raw[i].basis);
  }

  ClassicalChannel relay_channel;
  Bits plaintext = message;
  for (std::size_t h = 0; h < hops.size(); ++h) {
    const Bits& pad = (*pads)[h];
    const Bits cipher = one_time_pad(plaintext, pad);
    relay_channel.send(hops[h].first, hops[h].second, "relay", cipher.size());
    const Bits decoded = one_time_pad(cipher, pad);
    t.hops.push_back({hops[h].first, hops[h].second, cipher.size(), pad.size(), decoded == plaintext});
    plaintext = decoded;
  }
  std::vector<QubitSymbol> reprepared(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    reprepared[i] = QubitSymbol{plaintext[2 * i], static_cast<Basis>(plaintext[2 * i + 1])};
  }
  if (reprepared != raw) {
    t.aborted = true;
    t.abort_reason = "relay-corruption";
    return result;
  }

  ChainPlan plan;
  plan.protocol = "protocol_b";
  plan.source = path.front();
  plan.branch_a.push_back(hop_over(topology, path.front(), std::string(qnc1)));
  plan.branch_b.push_back(hop_over(topology, path.back(), std::string(qncN)));
  plan.classical_relays.assign(path.begin() + 1, path.end());
  return run_chain(plan, pulses, options, &reprepared, rng, std::move(result));
}

SessionResult protocol_b(const Topology& topology, std::string_view qnc1, std::string_view qncN,
                         std::uint64_t pulses, const DistillOptions& options, Rng& rng,
                         const ProvisionOptions& provision) {
  require_client(topology, qnc1);
  require_client(topology, qncN);
  const auto path = topology.route(topology.cell_of(qnc1), topology.cell_of(qncN));
  KeyBank bank;
  Rng setup = rng.fork();
  provision_pairwise_keys(topology, path, relay_message_bits(pulses), provision, bank, setup);
  return protocol_b(topology, qnc1, qncN, pulses, options, bank, rng);
}

}  // namespace qkdnet
