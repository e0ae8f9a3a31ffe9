#include "qkdnet/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qkdnet/errors.hpp"
#include "qkdnet/json_export.hpp"
#include "qkdnet/relay.hpp"
#include "qkdnet/topology.hpp"
#include "yaml_util.hpp"

namespace qkdnet {

namespace {

using detail::fail;
using detail::format_double;
using detail::scalar;

constexpr std::pair<Mode, std::string_view> kModes[] = {
    {Mode::link_budget, "link_budget"},
    {Mode::bb84, "bb84"},
    {Mode::protocol_a, "protocol_a"},
    {Mode::protocol_a_chain, "protocol_a_chain"},
    {Mode::protocol_b, "protocol_b"},
};

bool is_session_mode(Mode m) { return m != Mode::link_budget; }

DistillOptions parse_distill(const YAML::Node& map, const std::string& source) {
  detail::require_map(map, source, "distill");
  detail::check_keys(map, source,
                     {"sample_fraction", "security_margin", "max_qber", "zero_qber_floor",
                      "cascade_passes", "cascade_max_passes", "sift_only"});
  DistillOptions d;
  if (map["sample_fraction"]) d.sample_fraction = scalar<double>(map["sample_fraction"], source, "sample_fraction");
  if (map["security_margin"]) d.security_margin = scalar<std::size_t>(map["security_margin"], source, "security_margin");
  if (map["max_qber"]) d.max_qber = scalar<double>(map["max_qber"], source, "max_qber");
  if (map["zero_qber_floor"]) d.zero_qber_floor = scalar<double>(map["zero_qber_floor"], source, "zero_qber_floor");
  if (map["cascade_passes"]) d.cascade_passes = scalar<int>(map["cascade_passes"], source, "cascade_passes");
  if (map["cascade_max_passes"]) {
    d.cascade_max_passes = scalar<int>(map["cascade_max_passes"], source, "cascade_max_passes");
  }
  if (map["sift_only"]) d.sift_only = scalar<bool>(map["sift_only"], source, "sift_only");
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    fail(source, map, e.what());
  }
  return d;
}

std::string csv_field(const Cell& c) {
  struct Visitor {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(std::uint64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::string& v) const {
      if (v.find_first_of(",\"\n") == std::string::npos) return v;
      std::string q = "\"";
      for (char ch : v) {
        if (ch == '"') q += '"';
        q += ch;
      }
      return q + "\"";
    }
  };
  return std::visit(Visitor{}, c);
}

nlohmann::ordered_json json_field(const Cell& c) {
  struct Visitor {
    nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
    nlohmann::ordered_json operator()(std::int64_t v) const { return v; }
    nlohmann::ordered_json operator()(std::uint64_t v) const { return v; }
    nlohmann::ordered_json operator()(double v) const { return v; }
    nlohmann::ordered_json operator()(bool v) const { return v; }
    nlohmann::ordered_json operator()(const std::string& v) const { return v; }
  };
  return std::visit(Visitor{}, c);
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["schema"] = kConfigSchema;
  j["mode"] = to_string(c.mode);
  j["seed"] = c.seed;
  j["n_pulses"] = c.n_pulses;
  j["format"] = to_string(c.format);
  j["output"] = c.output;
  j["channel"] = to_json(c.channel);
  if (c.trunk) j["trunk"] = to_json(*c.trunk);
  if (c.adversary) j["adversary"] = {{"intercept_fraction", c.adversary->intercept_fraction},
                                     {"basis_strategy", "uniform_random"}};
  j["distill"] = {{"sample_fraction", c.distill.sample_fraction},
                  {"security_margin", c.distill.security_margin},
                  {"max_qber", c.distill.max_qber},
                  {"zero_qber_floor", c.distill.zero_qber_floor},
                  {"cascade_passes", c.distill.cascade_passes},
                  {"cascade_max_passes", c.distill.cascade_max_passes},
                  {"sift_only", c.distill.sift_only}};
  j["topology"] = c.topology_file;
  j["cells"] = c.cells;
  j["from"] = c.from;
  j["to"] = c.to;
  j["n_qbs"] = c.n_qbs;
  j["sweep"] = c.sweep;
  j["provision_pulses"] = c.provision_pulses;
  j["include_sequences"] = c.include_sequences;
  return j;
}

struct Point {
  std::uint64_t index;
  std::uint64_t value;  // n_qbs or cells
};

ResultTable link_budget_table(const ExperimentConfig& cfg) {
  ResultTable table{link_budget_columns(), {}};
  const ChannelParams& c = cfg.channel;
  std::vector<Cell> row{c.length_km,
                        c.loss_db,
                        transmittance(c.loss_db),
                        c.mu,
                        c.nu,
                        c.q_factor,
                        c.eta_d,
                        c.p_dark,
                        c.e_optical,
                        raw_key_rate(c),
                        signal_detection_probability(c),
                        click_probability(c),
                        click_probability(c) > 0 ? Cell{expected_qber(c)} : Cell{}};
  if (cfg.n_pulses > 0) {
    Rng rng(derive_seed(cfg.seed, 0));
    const DetectionTally tally = sample_tally(c, cfg.n_pulses, rng);
    row.emplace_back(tally.pulses_sent);
    row.emplace_back(tally.detections);
    row.emplace_back(static_cast<double>(tally.detections) * c.q_factor * c.nu /
                     static_cast<double>(tally.pulses_sent));
    row.emplace_back(tally.detections > 0 ? Cell{qber(tally)} : Cell{});
  } else {
    row.insert(row.end(), 4, Cell{});
  }
  table.rows.push_back(std::move(row));
  return table;
}

SessionResult run_point(const ExperimentConfig& cfg, const Point& pt, Rng& rng, double& expected) {
  const ChannelParams trunk = cfg.trunk.value_or(cfg.channel);
  const bool generated = cfg.topology_file.empty();
  std::optional<Topology> topo;
  if (!generated && cfg.mode != Mode::bb84) topo = load_topology(cfg.topology_file);

  auto endpoints = [&](std::uint64_t cells) -> std::pair<std::string, std::string> {
    if (!generated) return {cfg.from, cfg.to};
    if (cells <= 1) return {"qnc1a", "qnc1b"};
    return {"qnc1a", "qnc" + std::to_string(cells) + "a"};
  };

  switch (cfg.mode) {
    case Mode::bb84: {
      expected = 0.5;
      Bb84Config b{cfg.channel, cfg.adversary, cfg.n_pulses, cfg.distill};
      return run_bb84(b, rng, "bb84");
    }
    case Mode::protocol_a: {
      expected = 0.25;
      if (generated) topo = linear_topology(1, cfg.channel, trunk);
      const auto [a, b] = endpoints(1);
      return protocol_a(*topo, a, b, cfg.n_pulses, cfg.distill, rng);
    }
    case Mode::protocol_a_chain: {
      const std::uint64_t n = pt.value;
      expected = std::ldexp(1.0, -static_cast<int>(n + 1));
      if (generated) topo = linear_topology(std::max<std::uint64_t>(n, 1), cfg.channel, trunk);
      const auto [a, b] = endpoints(n);
      return protocol_a_chain(*topo, a, b, n, cfg.n_pulses, cfg.distill, rng);
    }
    case Mode::protocol_b: {
      expected = 0.25;
      if (generated) topo = linear_topology(pt.value, cfg.channel, trunk);
      const auto [a, b] = endpoints(pt.value);
      ProvisionOptions prov;
      prov.pulses_per_session = cfg.provision_pulses;
      prov.distill = cfg.distill;
      prov.distill.sift_only = false;
      return protocol_b(*topo, a, b, cfg.n_pulses, cfg.distill, rng, prov);
    }
    case Mode::link_budget:
      break;
  }
  throw std::logic_error("run_point: not a session mode");
}

std::string join_sizes(const std::vector<HopUsage>& hops, bool key) {
  std::string s;
  for (const auto& h : hops) {
    if (!s.empty()) s += ';';
    s += std::to_string(key ? h.key_bits_used : h.message_bits);
  }
  return s;
}

}  // namespace

std::string_view to_string(Mode mode) noexcept {
  for (const auto& [m, name] : kModes) {
    if (m == mode) return name;
  }
  return "unknown";
}

std::string_view to_string(OutputFormat format) noexcept {
  return format == OutputFormat::csv ? "csv" : "json";
}

std::optional<Mode> parse_mode(std::string_view text) noexcept {
  for (const auto& [m, name] : kModes) {
    if (name == text) return m;
  }
  return std::nullopt;
}

std::optional<OutputFormat> parse_format(std::string_view text) noexcept {
  if (text == "csv") return OutputFormat::csv;
  if (text == "json") return OutputFormat::json;
  return std::nullopt;
}

ExperimentConfig parse_config(std::string_view text, const std::string& source,
                              const std::string& base_dir) {
  using namespace detail;
  const YAML::Node root = load_yaml(text, source);
  require_map(root, source, "config");
  check_keys(root, source,
             {"schema", "mode", "seed", "n_pulses", "format", "output", "channel", "trunk",
              "adversary", "distill", "topology", "cells", "from", "to", "n_qbs", "sweep",
              "provision_pulses", "include_sequences"});
  if (!root["schema"]) fail(source, root, "missing schema header (expected '" + std::string(kConfigSchema) + "')");
  if (scalar<std::string>(root["schema"], source, "schema") != kConfigSchema) {
    fail(source, root["schema"], "unsupported schema '" + root["schema"].Scalar() + "'");
  }

  ExperimentConfig cfg;
  if (!root["mode"]) fail(source, root, "missing 'mode'");
  const auto mode = parse_mode(scalar<std::string>(root["mode"], source, "mode"));
  if (!mode) fail(source, root["mode"], "unknown mode '" + root["mode"].Scalar() + "'");
  cfg.mode = *mode;
  if (!root["seed"]) fail(source, root, "missing 'seed' (every experiment must be seeded)");
  cfg.seed = scalar<std::uint64_t>(root["seed"], source, "seed");

  if (root["n_pulses"]) cfg.n_pulses = scalar<std::uint64_t>(root["n_pulses"], source, "n_pulses");
  if (is_session_mode(cfg.mode) && cfg.n_pulses == 0) {
    fail(source, root["n_pulses"] ? root["n_pulses"] : root, "n_pulses must be > 0");
  }
  if (root["format"]) {
    const auto f = parse_format(scalar<std::string>(root["format"], source, "format"));
    if (!f) fail(source, root["format"], "format must be csv or json");
    cfg.format = *f;
  }
  if (root["output"]) cfg.output = scalar<std::string>(root["output"], source, "output");

  if (root["channel"]) {
    require_map(root["channel"], source, "channel");
    check_keys(root["channel"], source, kChannelKeys);
    cfg.channel = parse_channel(root["channel"], cfg.channel, source);
  }
  if (root["trunk"]) {
    require_map(root["trunk"], source, "trunk");
    check_keys(root["trunk"], source, kChannelKeys);
    cfg.trunk = parse_channel(root["trunk"], cfg.channel, source);
  }
  if (root["adversary"]) {
    if (cfg.mode != Mode::bb84) {
      fail(source, root["adversary"], "adversary applies to bb84 only; attach it to topology links otherwise");
    }
    cfg.adversary = parse_adversary(root["adversary"], source);
  }
  if (root["distill"]) cfg.distill = parse_distill(root["distill"], source);

  if (root["topology"]) {
    cfg.topology_file = scalar<std::string>(root["topology"], source, "topology");
    if (!cfg.topology_file.empty() && !base_dir.empty() &&
        std::filesystem::path(cfg.topology_file).is_relative()) {
      cfg.topology_file = (std::filesystem::path(base_dir) / cfg.topology_file).lexically_normal().string();
    }
  }
  if (root["cells"]) cfg.cells = scalar<std::uint64_t>(root["cells"], source, "cells");
  if (cfg.cells == 0) fail(source, root["cells"], "cells must be >= 1");
  if (root["from"]) cfg.from = scalar<std::string>(root["from"], source, "from");
  if (root["to"]) cfg.to = scalar<std::string>(root["to"], source, "to");
  if (root["n_qbs"]) cfg.n_qbs = scalar<std::uint64_t>(root["n_qbs"], source, "n_qbs");
  if (root["sweep"]) {
    const YAML::Node s = root["sweep"];
    if (!s.IsSequence() || s.size() == 0) fail(source, s, "sweep: expected a non-empty sequence");
    if (cfg.mode != Mode::protocol_a_chain && cfg.mode != Mode::protocol_b) {
      fail(source, s, "sweep applies to protocol_a_chain (n_qbs) and protocol_b (cells) only");
    }
    if (!cfg.topology_file.empty()) fail(source, s, "sweep requires the generated linear topology");
    for (const auto& v : s) cfg.sweep.push_back(scalar<std::uint64_t>(v, source, "sweep"));
    if (cfg.mode == Mode::protocol_b) {
      for (std::size_t i = 0; i < cfg.sweep.size(); ++i) {
        if (cfg.sweep[i] == 0) fail(source, s[i], "protocol_b sweep values are cell counts (>= 1)");
      }
    }
  }
  if (root["provision_pulses"]) {
    cfg.provision_pulses = scalar<std::uint64_t>(root["provision_pulses"], source, "provision_pulses");
    if (cfg.provision_pulses == 0) fail(source, root["provision_pulses"], "provision_pulses must be > 0");
  }
  if (root["include_sequences"]) {
    cfg.include_sequences = scalar<bool>(root["include_sequences"], source, "include_sequences");
  }

  const bool network = cfg.mode == Mode::protocol_a || cfg.mode == Mode::protocol_a_chain ||
                       cfg.mode == Mode::protocol_b;
  if (network && !cfg.topology_file.empty() && (cfg.from.empty() || cfg.to.empty())) {
    fail(source, root["topology"], "a topology file needs 'from' and 'to' client ids");
  }
  if (!network && !cfg.topology_file.empty()) {
    fail(source, root["topology"], "topology applies to network modes only");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path().string();
  return parse_config(ss.str(), path, dir);
}

std::string serialize_config(const ExperimentConfig& c) {
  using namespace detail;
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "schema" << YAML::Value << std::string(kConfigSchema);
  out << YAML::Key << "mode" << YAML::Value << std::string(to_string(c.mode));
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "n_pulses" << YAML::Value << c.n_pulses;
  out << YAML::Key << "format" << YAML::Value << std::string(to_string(c.format));
  out << YAML::Key << "output" << YAML::Value << YAML::DoubleQuoted << c.output;
  out << YAML::Key << "channel" << YAML::Value << YAML::BeginMap;
  emit_channel(out, c.channel);
  out << YAML::EndMap;
  if (c.trunk) {
    out << YAML::Key << "trunk" << YAML::Value << YAML::BeginMap;
    emit_channel(out, *c.trunk);
    out << YAML::EndMap;
  }
  if (c.adversary) {
    out << YAML::Key << "adversary" << YAML::Value;
    emit_adversary(out, *c.adversary);
  }
  out << YAML::Key << "distill" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "sample_fraction" << YAML::Value << format_double(c.distill.sample_fraction);
  out << YAML::Key << "security_margin" << YAML::Value << c.distill.security_margin;
  out << YAML::Key << "max_qber" << YAML::Value << format_double(c.distill.max_qber);
  out << YAML::Key << "zero_qber_floor" << YAML::Value << format_double(c.distill.zero_qber_floor);
  out << YAML::Key << "cascade_passes" << YAML::Value << c.distill.cascade_passes;
  out << YAML::Key << "cascade_max_passes" << YAML::Value << c.distill.cascade_max_passes;
  out << YAML::Key << "sift_only" << YAML::Value << c.distill.sift_only;
  out << YAML::EndMap;
  if (!c.topology_file.empty()) {
    out << YAML::Key << "topology" << YAML::Value << YAML::DoubleQuoted << c.topology_file;
  }
  out << YAML::Key << "cells" << YAML::Value << c.cells;
  if (!c.from.empty()) out << YAML::Key << "from" << YAML::Value << YAML::DoubleQuoted << c.from;
  if (!c.to.empty()) out << YAML::Key << "to" << YAML::Value << YAML::DoubleQuoted << c.to;
  out << YAML::Key << "n_qbs" << YAML::Value << c.n_qbs;
  if (!c.sweep.empty()) {
    out << YAML::Key << "sweep" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (auto v : c.sweep) out << v;
    out << YAML::EndSeq;
  }
  out << YAML::Key << "provision_pulses" << YAML::Value << c.provision_pulses;
  out << YAML::Key << "include_sequences" << YAML::Value << c.include_sequences;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

const std::vector<std::string>& link_budget_columns() {
  static const std::vector<std::string> cols{
      "length_km", "loss_db",        "transmittance", "mu",       "nu",
      "q_factor",  "eta_d",          "p_dark",        "e_optical", "raw_key_rate_hz",
      "p_signal",  "p_click",        "expected_qber", "pulses",   "detections",
      "sim_click_rate_hz", "sim_qber"};
  return cols;
}

const std::vector<std::string>& session_columns() {
  static const std::vector<std::string> cols{
      "point",          "protocol",          "n_qbs",           "cells",
      "seed",           "pulses",            "detected",        "sifted",
      "sifted_fraction", "expected_sifted_fraction", "sampled", "sample_mismatches",
      "measured_qber",  "sifted_qber",       "corrected",       "leaked_bits",
      "verification_bits", "final",          "keys_match",      "aborted",
      "abort_reason",   "hop_message_bits",  "hop_key_bits",    "raw_key_rate_hz"};
  return cols;
}

std::string render_csv(const ResultTable& table, const std::string& preamble) {
  std::string out = preamble;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ',';
    out += table.columns[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_field(row[i]);
    }
    out += '\n';
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.channel.validate();
  ExperimentResult result;
  ResultTable table;
  nlohmann::ordered_json transcripts = nlohmann::ordered_json::array();

  if (cfg.mode == Mode::link_budget) {
    table = link_budget_table(cfg);
    result.points = 1;
  } else {
    table.columns = session_columns();
    std::vector<Point> points;
    const std::uint64_t single = cfg.mode == Mode::protocol_a_chain ? cfg.n_qbs
                                 : cfg.mode == Mode::protocol_b     ? cfg.cells
                                                                    : 0;
    if (cfg.sweep.empty()) {
      points.push_back({0, single});
    } else {
      for (std::size_t i = 0; i < cfg.sweep.size(); ++i) points.push_back({i, cfg.sweep[i]});
    }
    for (const auto& pt : points) {
      const std::uint64_t seed = derive_seed(cfg.seed, pt.index);
      Rng rng(seed);
      double expected = 0;
      SessionResult r = run_point(cfg, pt, rng, expected);
      auto& t = r.transcript;
      t.seed = seed;
      t.session_id = t.protocol + "-" + std::to_string(pt.index);
      ++result.points;
      if (t.aborted) ++result.aborted_points;

      const bool chain = cfg.mode == Mode::protocol_a_chain;
      const bool relay = cfg.mode == Mode::protocol_b;
      table.rows.push_back({pt.index,
                            t.protocol,
                            chain ? Cell{pt.value} : Cell{},
                            relay ? Cell{pt.value} : Cell{},
                            seed,
                            t.pulses_sent,
                            static_cast<std::uint64_t>(t.detected),
                            static_cast<std::uint64_t>(t.lengths.sifted),
                            t.sifted_fraction(),
                            expected,
                            static_cast<std::uint64_t>(t.lengths.sampled),
                            static_cast<std::uint64_t>(t.sample_mismatches),
                            t.measured_qber,
                            t.sifted_qber,
                            static_cast<std::uint64_t>(t.lengths.corrected),
                            static_cast<std::uint64_t>(t.leaked_bits),
                            static_cast<std::uint64_t>(t.verification_bits),
                            static_cast<std::uint64_t>(t.lengths.final),
                            t.keys_match,
                            t.aborted,
                            t.abort_reason,
                            join_sizes(t.hops, false),
                            join_sizes(t.hops, true),
                            raw_key_rate(cfg.channel)});
      transcripts.push_back(to_json(t, cfg.include_sequences));
    }
  }

  if (cfg.format == OutputFormat::csv) {
    std::string preamble = "# " + std::string(kResultSchema) + "\n";
    std::istringstream echo(serialize_config(cfg));
    for (std::string line; std::getline(echo, line);) preamble += "# " + line + "\n";
    result.artifact = render_csv(table, preamble);
  } else {
    nlohmann::ordered_json j;
    j["schema"] = kResultSchema;
    j["mode"] = to_string(cfg.mode);
    j["config"] = config_to_json(cfg);
    j["columns"] = table.columns;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
      nlohmann::ordered_json o;
      for (std::size_t i = 0; i < row.size(); ++i) o[table.columns[i]] = json_field(row[i]);
      rows.push_back(std::move(o));
    }
    j["rows"] = std::move(rows);
    if (cfg.mode != Mode::link_budget) j["transcripts"] = std::move(transcripts);
    result.artifact = j.dump(2) + "\n";
  }
  return result;
}

}  // namespace qkdnet
