#include "qkdnet/topology.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qkdnet/errors.hpp"
#include "yaml_util.hpp"

namespace qkdnet {

namespace {

void invalid(const std::string& what) { throw std::invalid_argument("topology: " + what); }

bool same_pair(const NodePair& p, std::string_view a, std::string_view b) {
  return (p.first == a && p.second == b) || (p.first == b && p.second == a);
}

}  // namespace

Topology::Topology(std::vector<Node> nodes, std::vector<QuantumLink> quantum,
                   std::vector<NodePair> classical)
    : nodes_(std::move(nodes)), quantum_(std::move(quantum)), classical_(std::move(classical)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.id.empty()) invalid("empty node id");
    if (n.cell.empty()) invalid("node '" + n.id + "' has no cell");
    if (!node_index_.emplace(n.id, i).second) invalid("duplicate node id '" + n.id + "'");
    if (n.kind == NodeKind::qbs && !cell_qbs_.emplace(n.cell, n.id).second) {
      invalid("cell '" + n.cell + "' has more than one QBS");
    }
  }
  for (const auto& n : nodes_) {
    if (!cell_qbs_.contains(n.cell)) invalid("cell '" + n.cell + "' has no QBS");
  }

  std::set<std::pair<std::string, std::string>> seen;
  std::map<std::string, int, std::less<>> qnc_links;
  for (const auto& l : quantum_) {
    if (!has_node(l.a) || !has_node(l.b)) invalid("link " + l.a + "-" + l.b + " names an unknown node");
    if (l.a == l.b) invalid("self link at '" + l.a + "'");
    if (!seen.insert(std::minmax(l.a, l.b)).second) invalid("duplicate link " + l.a + "-" + l.b);
    l.channel.validate();
    if (l.adversary) l.adversary->validate();
    const Node& a = node(l.a);
    const Node& b = node(l.b);
    if (a.kind == NodeKind::qnc && b.kind == NodeKind::qnc) {
      invalid("QNCs '" + a.id + "' and '" + b.id + "' cannot be linked directly");
    }
    if (a.kind == NodeKind::qnc || b.kind == NodeKind::qnc) {
      const Node& client = a.kind == NodeKind::qnc ? a : b;
      const Node& station = a.kind == NodeKind::qnc ? b : a;
      if (station.id != cell_qbs_.at(client.cell)) {
        invalid("QNC '" + client.id + "' may only link to the QBS of cell '" + client.cell + "'");
      }
      if (++qnc_links[client.id] > 1) invalid("QNC '" + client.id + "' has more than one link");
      continue;
    }
    if (a.cell == b.cell) invalid("QBS link " + a.id + "-" + b.id + " inside one cell");
    if (l.channel.length_km > kMaxInterCellKm) {
      invalid("inter-cell link " + a.id + "-" + b.id + " exceeds " +
              std::to_string(static_cast<int>(kMaxInterCellKm)) + " km");
    }
  }

  if (classical_.empty()) {
    for (const auto& l : quantum_) classical_.emplace_back(l.a, l.b);
  }
  for (const auto& c : classical_) {
    if (!has_node(c.first) || !has_node(c.second)) {
      invalid("classical link " + c.first + "-" + c.second + " names an unknown node");
    }
  }
}

const Node& Topology::node(std::string_view id) const {
  auto it = node_index_.find(id);
  if (it == node_index_.end()) throw std::out_of_range("topology: unknown node '" + std::string(id) + "'");
  return nodes_[it->second];
}

bool Topology::has_node(std::string_view id) const { return node_index_.find(id) != node_index_.end(); }

const QuantumLink& Topology::quantum_link(std::string_view a, std::string_view b) const {
  for (const auto& l : quantum_) {
    if ((l.a == a && l.b == b) || (l.a == b && l.b == a)) return l;
  }
  throw RoutingError("no quantum link between '" + std::string(a) + "' and '" + std::string(b) + "'");
}

bool Topology::has_classical_link(std::string_view a, std::string_view b) const {
  return std::any_of(classical_.begin(), classical_.end(),
                     [&](const NodePair& p) { return same_pair(p, a, b); });
}

std::vector<std::string> Topology::cells() const {
  std::vector<std::string> out;
  for (const auto& [cell, qbs] : cell_qbs_) out.push_back(cell);
  return out;
}

const std::string& Topology::qbs_of_cell(std::string_view cell) const {
  auto it = cell_qbs_.find(cell);
  if (it == cell_qbs_.end()) throw std::out_of_range("topology: unknown cell '" + std::string(cell) + "'");
  return it->second;
}

std::vector<std::string> Topology::qbs_neighbors(std::string_view qbs) const {
  std::vector<std::string> out;
  for (const auto& l : quantum_) {
    const Node& a = node(l.a);
    const Node& b = node(l.b);
    if (a.kind != NodeKind::qbs || b.kind != NodeKind::qbs) continue;
    if (l.a == qbs) out.push_back(l.b);
    if (l.b == qbs) out.push_back(l.a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> Topology::route(std::string_view cell_a, std::string_view cell_b) const {
  const std::string& from = qbs_of_cell(cell_a);
  const std::string& to = qbs_of_cell(cell_b);
  if (from == to) return {from};

  // Hop distances to the destination, then a greedy walk that always takes
  // the smallest-id neighbour one hop closer.
  std::map<std::string, std::size_t, std::less<>> dist{{to, 0}};
  std::deque<std::string> queue{to};
  while (!queue.empty()) {
    const std::string cur = queue.front();
    queue.pop_front();
    for (const auto& nb : qbs_neighbors(cur)) {
      if (dist.emplace(nb, dist[cur] + 1).second) queue.push_back(nb);
    }
  }
  if (!dist.contains(from)) {
    throw RoutingError("no route between cells '" + std::string(cell_a) + "' and '" +
                       std::string(cell_b) + "'");
  }
  std::vector<std::string> path{from};
  while (path.back() != to) {
    const std::size_t d = dist.at(path.back());
    for (const auto& nb : qbs_neighbors(path.back())) {
      auto it = dist.find(nb);
      if (it != dist.end() && it->second + 1 == d) {
        path.push_back(nb);
        break;
      }
    }
  }
  return path;
}

Topology parse_topology(std::string_view text, const std::string& source) {
  using namespace detail;
  const YAML::Node root = load_yaml(text, source);
  require_map(root, source, "topology");
  check_keys(root, source, {"schema", "defaults", "cells", "links", "classical"});
  if (!root["schema"]) fail(source, root, "missing schema header (expected '" + std::string(kTopologySchema) + "')");
  if (scalar<std::string>(root["schema"], source, "schema") != kTopologySchema) {
    fail(source, root["schema"], "unsupported schema '" + root["schema"].Scalar() + "'");
  }

  ChannelParams defaults;
  if (root["defaults"]) {
    require_map(root["defaults"], source, "defaults");
    check_keys(root["defaults"], source, kChannelKeys);
    defaults = parse_channel(root["defaults"], defaults, source);
  }

  std::vector<Node> nodes;
  const YAML::Node cells = root["cells"];
  if (!cells || !cells.IsSequence()) fail(source, root, "cells: expected a sequence");
  for (const auto& c : cells) {
    require_map(c, source, "cell");
    check_keys(c, source, {"id", "qbs", "qncs"});
    if (!c["id"] || !c["qbs"]) fail(source, c, "cell needs 'id' and 'qbs'");
    const auto cell = scalar<std::string>(c["id"], source, "id");
    nodes.push_back({scalar<std::string>(c["qbs"], source, "qbs"), NodeKind::qbs, cell});
    if (c["qncs"]) {
      if (!c["qncs"].IsSequence()) fail(source, c["qncs"], "qncs: expected a sequence");
      for (const auto& q : c["qncs"]) nodes.push_back({scalar<std::string>(q, source, "qnc"), NodeKind::qnc, cell});
    }
  }

  std::vector<QuantumLink> links;
  std::vector<std::size_t> link_lines;
  if (const YAML::Node ls = root["links"]) {
    if (!ls.IsSequence()) fail(source, ls, "links: expected a sequence");
    for (const auto& l : ls) {
      require_map(l, source, "link");
      static constexpr std::string_view kLinkExtras[] = {"between", "adversary"};
      check_keys(l, source, kChannelKeys, kLinkExtras);
      const YAML::Node between = l["between"];
      if (!between || !between.IsSequence() || between.size() != 2) {
        fail(source, l, "link needs 'between: [a, b]'");
      }
      QuantumLink link;
      link.a = scalar<std::string>(between[0], source, "between");
      link.b = scalar<std::string>(between[1], source, "between");
      link.channel = parse_channel(l, defaults, source);
      if (l["adversary"]) link.adversary = parse_adversary(l["adversary"], source);
      links.push_back(std::move(link));
      link_lines.push_back(line_of(l));
    }
  }

  std::vector<NodePair> classical;
  if (const YAML::Node cs = root["classical"]) {
    if (!cs.IsSequence()) fail(source, cs, "classical: expected a sequence");
    for (const auto& c : cs) {
      if (!c.IsSequence() || c.size() != 2) fail(source, c, "classical entry must be [a, b]");
      classical.emplace_back(scalar<std::string>(c[0], source, "classical"),
                             scalar<std::string>(c[1], source, "classical"));
    }
  }

  try {
    return Topology(std::move(nodes), std::move(links), std::move(classical));
  } catch (const std::invalid_argument& e) {
    // Anchor link-level violations to the link's line when the message names it.
    const std::string msg = e.what();
    for (std::size_t i = 0; i < link_lines.size(); ++i) {
      const auto& l = root["links"][i];
      const std::string tag = scalar<std::string>(l["between"][0], source, "between") + "-" +
                              scalar<std::string>(l["between"][1], source, "between");
      if (msg.find(tag) != std::string::npos) throw ConfigError(source, link_lines[i], msg);
    }
    throw ConfigError(source, line_of(root), msg);
  }
}

Topology load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open topology file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_topology(ss.str(), path);
}

std::string serialize_topology(const Topology& topology) {
  using namespace detail;
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "schema" << YAML::Value << std::string(kTopologySchema);
  out << YAML::Key << "cells" << YAML::Value << YAML::BeginSeq;
  for (const auto& station : topology.nodes()) {
    if (station.kind != NodeKind::qbs) continue;
    const std::string& cell = station.cell;
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << cell;
    out << YAML::Key << "qbs" << YAML::Value << topology.qbs_of_cell(cell);
    out << YAML::Key << "qncs" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& n : topology.nodes()) {
      if (n.kind == NodeKind::qnc && n.cell == cell) out << n.id;
    }
    out << YAML::EndSeq << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "links" << YAML::Value << YAML::BeginSeq;
  for (const auto& l : topology.quantum_links()) {
    out << YAML::BeginMap;
    out << YAML::Key << "between" << YAML::Value << YAML::Flow << YAML::BeginSeq << l.a << l.b << YAML::EndSeq;
    emit_channel(out, l.channel);
    if (l.adversary) {
      out << YAML::Key << "adversary" << YAML::Value;
      emit_adversary(out, *l.adversary);
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "classical" << YAML::Value << YAML::BeginSeq;
  for (const auto& c : topology.classical_links()) {
    out << YAML::Flow << YAML::BeginSeq << c.first << c.second << YAML::EndSeq;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

Topology linear_topology(std::size_t cells, const ChannelParams& access, const ChannelParams& trunk) {
  if (cells == 0) throw std::invalid_argument("linear_topology: need at least one cell");
  std::vector<Node> nodes;
  std::vector<QuantumLink> links;
  for (std::size_t i = 1; i <= cells; ++i) {
    const std::string cell = "cell" + std::to_string(i);
    const std::string qbs = "qbs" + std::to_string(i);
    nodes.push_back({qbs, NodeKind::qbs, cell});
    for (const char* suffix : {"a", "b"}) {
      const std::string qnc = "qnc" + std::to_string(i) + suffix;
      nodes.push_back({qnc, NodeKind::qnc, cell});
      links.push_back({qbs, qnc, access, std::nullopt});
    }
    if (i > 1) links.push_back({"qbs" + std::to_string(i - 1), qbs, trunk, std::nullopt});
  }
  return Topology(std::move(nodes), std::move(links));
}

}  // namespace qkdnet
