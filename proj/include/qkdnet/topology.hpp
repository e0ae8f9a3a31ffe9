#pragma once

// Quantum cellular network: cells, each with one base station (QBS) and its
// clients (QNC), joined by fiber links between base stations.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qkdnet/adversary.hpp"
#include "qkdnet/channel.hpp"

namespace qkdnet {

inline constexpr double kMaxInterCellKm = 100.0;
inline constexpr std::string_view kTopologySchema = "qkdnet-topology/1";

enum class NodeKind : std::uint8_t { qnc, qbs };

struct Node {
  std::string id;
  NodeKind kind = NodeKind::qnc;
  std::string cell;
  bool operator==(const Node&) const = default;
};

struct QuantumLink {
  std::string a;
  std::string b;
  ChannelParams channel;
  std::optional<InterceptResendConfig> adversary;
  bool operator==(const QuantumLink&) const = default;
};

using NodePair = std::pair<std::string, std::string>;

class Topology {
 public:
  // Validates the cell invariants; throws std::invalid_argument. When
  // `classical` is empty, every quantum link also carries a classical link.
  Topology(std::vector<Node> nodes, std::vector<QuantumLink> quantum,
           std::vector<NodePair> classical = {});

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<QuantumLink>& quantum_links() const noexcept { return quantum_; }
  const std::vector<NodePair>& classical_links() const noexcept { return classical_; }

  const Node& node(std::string_view id) const;  // throws std::out_of_range
  bool has_node(std::string_view id) const;
  const QuantumLink& quantum_link(std::string_view a, std::string_view b) const;
  bool has_classical_link(std::string_view a, std::string_view b) const;

  std::vector<std::string> cells() const;
  const std::string& qbs_of_cell(std::string_view cell) const;
  const std::string& cell_of(std::string_view node_id) const { return node(node_id).cell; }

  // QBSs adjacent over inter-cell quantum links, sorted by id.
  std::vector<std::string> qbs_neighbors(std::string_view qbs) const;

  // Minimal-hop QBS path between two cells over inter-cell quantum links;
  // among equal-length paths the lexicographically smallest id sequence wins.
  // Throws RoutingError when the cells are disconnected.
  std::vector<std::string> route(std::string_view cell_a, std::string_view cell_b) const;

  bool operator==(const Topology& other) const {
    return nodes_ == other.nodes_ && quantum_ == other.quantum_ && classical_ == other.classical_;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<QuantumLink> quantum_;
  std::vector<NodePair> classical_;
  std::map<std::string, std::size_t, std::less<>> node_index_;
  std::map<std::string, std::string, std::less<>> cell_qbs_;
};

// YAML topology description (schema header "qkdnet-topology/1"). Errors are
// reported as ConfigError with the offending line.
Topology parse_topology(std::string_view text, const std::string& source = "<topology>");
Topology load_topology(const std::string& path);
std::string serialize_topology(const Topology& topology);

// Chain of `cells` cells: cell i has QBS "qbs<i>" and clients "qnc<i>a",
// "qnc<i>b"; neighbouring QBSs are linked by `trunk`, clients by `access`.
Topology linear_topology(std::size_t cells, const ChannelParams& access, const ChannelParams& trunk);

}  // namespace qkdnet
