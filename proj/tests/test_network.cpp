#include <doctest.h>

#include <algorithm>
#include <functional>
#include <set>

#include "qkdnet/errors.hpp"
#include "qkdnet/relay.hpp"
#include "qkdnet/topology.hpp"
#include "support.hpp"

using namespace qkdnet;
using qkdnet::testing::binomial_band;

namespace {

ChannelParams bright() {
  ChannelParams c;
  c.mu = 50;  // every gate clicks; isolates basis statistics from loss
  return c;
}

DistillOptions sift_only() {
  DistillOptions d;
  d.sift_only = true;
  return d;
}

std::string ring5_yaml() {
  std::string y = "schema: qkdnet-topology/1\ndefaults: {mu: 50}\ncells:\n";
  for (int i = 1; i <= 5; ++i) {
    const auto n = std::to_string(i);
    y += "  - {id: cell" + n + ", qbs: qbs" + n + ", qncs: [qnc" + n + "a, qnc" + n + "b]}\n";
  }
  y += "links:\n";
  for (int i = 1; i <= 5; ++i) {
    const auto n = std::to_string(i);
    y += "  - {between: [qnc" + n + "a, qbs" + n + "]}\n  - {between: [qnc" + n + "b, qbs" + n + "]}\n";
    y += "  - {between: [qbs" + n + ", qbs" + std::to_string(i % 5 + 1) + "], length_km: 40, loss_db: 0}\n";
  }
  return y;
}

// Every simple path between two QBSs, by exhaustive search.
std::vector<std::vector<std::string>> all_simple_paths(const Topology& t, const std::string& a,
                                                       const std::string& b) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> path{a};
  std::function<void()> walk = [&] {
    if (path.back() == b) {
      out.push_back(path);
      return;
    }
    for (const auto& nb : t.qbs_neighbors(path.back())) {
      if (std::find(path.begin(), path.end(), nb) != path.end()) continue;
      path.push_back(nb);
      walk();
      path.pop_back();
    }
  };
  walk();
  return out;
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("classify_bases reproduces the eight agreement rows") {
  using B = Basis;
  const B x = B::sigma_x, y = B::sigma_y;
  struct Row {
    B qnc1, qbs, qnc2;
    BasisAgreement expected;
  };
  const Row rows[] = {
      {x, x, x, BasisAgreement::secret_key},         {x, x, y, BasisAgreement::partial_secret_key},
      {x, y, x, BasisAgreement::no_secret_key},      {x, y, y, BasisAgreement::partial_secret_key},
      {y, x, x, BasisAgreement::partial_secret_key}, {y, x, y, BasisAgreement::no_secret_key},
      {y, y, x, BasisAgreement::partial_secret_key}, {y, y, y, BasisAgreement::secret_key},
  };
  for (const auto& r : rows) CHECK(classify_bases(r.qnc1, r.qbs, r.qnc2) == r.expected);
  CHECK(to_string(BasisAgreement::partial_secret_key) == "partial_secret_key");
}

TEST_CASE("topology invariants are enforced") {
  const ChannelParams c;
  std::vector<Node> nodes{{"q1", NodeKind::qbs, "c1"}, {"a", NodeKind::qnc, "c1"},
                          {"q2", NodeKind::qbs, "c2"}, {"b", NodeKind::qnc, "c2"}};
  ChannelParams far = c;
  far.length_km = 120;
  CHECK_THROWS_AS(Topology(nodes, {{"q1", "q2", far, {}}}), std::invalid_argument);
  CHECK_THROWS_AS(Topology(nodes, {{"a", "q2", c, {}}}), std::invalid_argument);
  CHECK_THROWS_AS(Topology(nodes, {{"a", "b", c, {}}}), std::invalid_argument);
  auto two_qbs = nodes;
  two_qbs.push_back({"q3", NodeKind::qbs, "c1"});
  CHECK_THROWS_AS(Topology(two_qbs, {}), std::invalid_argument);
  auto no_qbs = nodes;
  no_qbs.push_back({"z", NodeKind::qnc, "c9"});
  CHECK_THROWS_AS(Topology(no_qbs, {}), std::invalid_argument);
  CHECK_NOTHROW(Topology(nodes, {{"a", "q1", c, {}}, {"q1", "q2", c, {}}, {"b", "q2", c, {}}}));
}

TEST_CASE("routing: same cell, chain ends, unreachable") {
  const auto chain = linear_topology(4, bright(), bright());
  CHECK(chain.route("cell2", "cell2") == std::vector<std::string>{"qbs2"});
  CHECK(chain.route("cell1", "cell4") == std::vector<std::string>{"qbs1", "qbs2", "qbs3", "qbs4"});
  CHECK(chain.route("cell4", "cell1") == std::vector<std::string>{"qbs4", "qbs3", "qbs2", "qbs1"});

  std::vector<Node> nodes{{"q1", NodeKind::qbs, "c1"}, {"q2", NodeKind::qbs, "c2"}};
  const Topology split(nodes, {});
  CHECK_THROWS_AS(split.route("c1", "c2"), RoutingError);
}

TEST_CASE("routing on a ring is minimal against brute force") {
  const Topology ring = parse_topology(ring5_yaml());
  CHECK(ring.route("cell1", "cell2") == std::vector<std::string>{"qbs1", "qbs2"});
  CHECK(ring.route("cell1", "cell5") == std::vector<std::string>{"qbs1", "qbs5"});
  for (int i = 1; i <= 5; ++i) {
    for (int j = 1; j <= 5; ++j) {
      const auto a = "qbs" + std::to_string(i), b = "qbs" + std::to_string(j);
      const auto got = ring.route("cell" + std::to_string(i), "cell" + std::to_string(j));
      std::size_t best = SIZE_MAX;
      std::vector<std::vector<std::string>> shortest;
      for (auto& p : all_simple_paths(ring, a, b)) {
        if (p.size() < best) {
          best = p.size();
          shortest.clear();
        }
        if (p.size() == best) shortest.push_back(p);
      }
      REQUIRE(got.size() == best);
      // tie-break: lexicographically smallest node sequence
      CHECK(got == *std::min_element(shortest.begin(), shortest.end()));
    }
  }
}

TEST_CASE("topology files: round trip and line-anchored errors") {
  const Topology ring = parse_topology(ring5_yaml(), "ring.yaml");
  CHECK(parse_topology(serialize_topology(ring)) == ring);
  const auto lin = linear_topology(3, bright(), ChannelParams::fiber(50));
  CHECK(parse_topology(serialize_topology(lin)) == lin);

  std::string bad = ring5_yaml();
  bad.replace(bad.find("length_km: 40"), 13, "length_km: 140");
  try {
    parse_topology(bad, "ring.yaml");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 12);
    CHECK(std::string(e.what()).rfind("ring.yaml:12:", 0) == 0);
  }
  try {
    parse_topology("schema: qkdnet-topology/1\ncells:\n  - {id: c1, qbs: q1, colour: red}\n", "t");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_topology("schema: other/1\ncells: []\n"), ConfigError);
  CHECK_THROWS_AS(parse_topology("cells: [\n"), ConfigError);
}

TEST_CASE("protocol A: a quarter survives, QBS knows everything") {
  const auto topo = linear_topology(1, bright(), bright());
  Rng rng(1);
  const auto r = protocol_a(topo, "qnc1a", "qnc1b", 1'000'000, sift_only(), rng);
  const auto& t = r.transcript;
  CHECK(std::abs(t.sifted_fraction() - 0.25) < 0.002);
  REQUIRE(t.basis_classes);
  const auto& k = *t.basis_classes;
  CHECK(k.secret_key == t.lengths.sifted);
  const double n = static_cast<double>(t.detected);
  CHECK(static_cast<double>(k.partial_secret_key) / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(static_cast<double>(k.no_secret_key) / n == doctest::Approx(0.25).epsilon(0.02));
  REQUIRE_FALSE(t.knowledge.empty());
  CHECK(t.knowledge[0].node == "qbs1");
  CHECK(t.knowledge[0].role == "source");
  CHECK(t.knowledge[0].known_bits == t.lengths.sifted);

  const auto other = linear_topology(2, bright(), bright());
  CHECK_THROWS_AS(protocol_a(other, "qnc1a", "qnc2a", 10, sift_only(), rng), RoutingError);
}

TEST_CASE("protocol A: completed runs give identical keys") {
  ChannelParams access;
  access.mu = 0.5;
  access.e_optical = 0.01;
  access.p_dark = 1e-5;
  const auto topo = linear_topology(1, access, access);
  for (std::uint64_t s = 0; s < 5; ++s) {
    Rng rng(20 + s);
    const auto r = protocol_a(topo, "qnc1a", "qnc1b", 300000, DistillOptions{}, rng);
    REQUIRE(r.completed());
    CHECK(r.key_a == r.key_b);
    CHECK(r.transcript.lengths.final > 0);
  }
}

TEST_CASE("protocol A chain: fraction 2^-(n+1)") {
  for (std::size_t n = 0; n <= 4; ++n) {
    const auto topo = linear_topology(std::max<std::size_t>(n, 1), bright(), bright());
    const std::string to = n <= 1 ? "qnc1b" : "qnc" + std::to_string(n) + "a";
    Rng rng(30 + n);
    const auto r = protocol_a_chain(topo, "qnc1a", to, n, 1'000'000, sift_only(), rng);
    const double p = std::ldexp(1.0, -static_cast<int>(n + 1));
    CHECK(std::abs(r.transcript.sifted_fraction() - p) < binomial_band(p, r.transcript.detected));
    // relays measured and re-prepared; they know every sifted bit
    std::size_t relays = 0;
    for (const auto& k : r.transcript.knowledge) {
      if (k.role == "relay") {
        ++relays;
        CHECK(k.known_bits == r.transcript.lengths.sifted);
      }
    }
    CHECK(relays == (n == 0 ? 0 : n - 1));
  }
  const auto topo = linear_topology(3, bright(), bright());
  Rng rng(3);
  CHECK_THROWS_AS(protocol_a_chain(topo, "qnc1a", "qnc3a", 2, 100, sift_only(), rng), RoutingError);
}

TEST_CASE("one-time pad masking") {
  CHECK(one_time_pad(from_bitstring("1011"), from_bitstring("0110")) == from_bitstring("1101"));
  CHECK(one_time_pad(from_bitstring("1101"), from_bitstring("0110")) == from_bitstring("1011"));
  CHECK(one_time_pad(from_bitstring("1011"), from_bitstring("0000")) == from_bitstring("1011"));
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = rng.below(300) + 1;
    Bits x(n), k(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.bit();
      k[i] = rng.bit();
    }
    REQUIRE(one_time_pad(one_time_pad(x, k), k) == x);
  }
  CHECK_THROWS(one_time_pad(Bits{1, 0}, Bits{1}));
}

TEST_CASE("key bank draws are all-or-nothing") {
  KeyBank bank;
  bank.deposit("qbs1", "qbs2", Bits(100, 1));
  bank.deposit("qbs3", "qbs2", Bits(50, 0));
  CHECK(bank.available("qbs2", "qbs1") == 100);
  const std::vector<NodePair> links{{"qbs1", "qbs2"}, {"qbs2", "qbs3"}};
  CHECK_FALSE(bank.draw_all(links, 60));
  CHECK(bank.available("qbs1", "qbs2") == 100);
  CHECK(bank.consumed("qbs1", "qbs2") == 0);
  const auto got = bank.draw_all(links, 40);
  REQUIRE(got);
  CHECK((*got)[0].size() == 40);
  CHECK(bank.available("qbs2", "qbs3") == 10);
  CHECK(bank.consumed("qbs2", "qbs3") == 40);
}

TEST_CASE("protocol B: keys, hop accounting and knowledge") {
  ChannelParams trunk = bright();
  trunk.mu = 0.5;
  trunk.length_km = 60;
  for (std::size_t cells : {1u, 3u}) {
    const auto topo = linear_topology(cells, bright(), trunk);
    const std::string to = cells == 1 ? "qnc1b" : "qnc" + std::to_string(cells) + "a";
    Rng rng(40 + cells);
    ProvisionOptions prov;
    prov.pulses_per_session = 200000;
    const auto r = protocol_b(topo, "qnc1a", to, 40000, DistillOptions{}, rng, prov);
    const auto& t = r.transcript;
    REQUIRE(r.completed());
    CHECK(r.key_a == r.key_b);
    CHECK(t.hops.size() == cells - 1);
    for (const auto& h : t.hops) {
      CHECK(h.message_bits == relay_message_bits(40000));
      CHECK(h.key_bits_used == h.message_bits);
      CHECK(h.decoded_ok);
    }
    for (const auto& k : t.knowledge) {
      if (k.role != "adversary") CHECK(k.known_bits == t.lengths.sifted);
    }
    CHECK(t.knowledge.size() == cells);
    CHECK(std::abs(t.sifted_fraction() - 0.25) < binomial_band(0.25, t.detected, 4));
  }
}

TEST_CASE("protocol B: exhaustion aborts and leaves the bank untouched") {
  const auto topo = linear_topology(3, bright(), bright());
  KeyBank bank;
  bank.deposit("qbs1", "qbs2", Bits(1000, 0));
  bank.deposit("qbs2", "qbs3", Bits(100, 0));
  Rng rng(5);
  const auto r = protocol_b(topo, "qnc1a", "qnc3a", 200, DistillOptions{}, bank, rng);
  CHECK_FALSE(r.completed());
  CHECK(r.transcript.abort_reason == "key-exhausted");
  CHECK(bank.available("qbs1", "qbs2") == 1000);
  CHECK(bank.available("qbs2", "qbs3") == 100);
}

TEST_CASE("protocol B: provisioning bounded by the session budget") {
  ChannelParams dead = bright();
  dead.eta_d = 0;
  const auto topo = linear_topology(2, bright(), dead);
  Rng rng(6);
  ProvisionOptions prov;
  prov.pulses_per_session = 1000;
  prov.max_sessions_per_link = 3;
  KeyBank bank;
  CHECK_THROWS_AS(provision_pairwise_keys(topo, {"qbs1", "qbs2"}, 100, prov, bank, rng),
                  KeyExhaustedError);
}

TEST_CASE("adversary on a topology link shows up in the transcript") {
  std::string y = ring5_yaml();
  y.replace(y.find("  - {between: [qnc1a, qbs1]}"), 28,
            "  - {between: [qnc1a, qbs1], adversary: {intercept_fraction: 1.0}}");
  const Topology t = parse_topology(y);
  Rng rng(7);
  const auto r = protocol_a(t, "qnc1a", "qnc1b", 400000, sift_only(), rng);
  REQUIRE(r.transcript.adversaries.size() == 1);
  CHECK(std::abs(r.transcript.sifted_qber - 0.25) < binomial_band(0.25, r.transcript.lengths.sifted, 4));
}

}  // TEST_SUITE
