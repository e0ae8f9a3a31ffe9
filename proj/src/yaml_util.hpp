#pragma once

// Shared YAML helpers for topology and experiment files.

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>

#include "qkdnet/adversary.hpp"
#include "qkdnet/channel.hpp"
#include "qkdnet/errors.hpp"

namespace qkdnet::detail {

inline std::size_t line_of(const YAML::Node& node) {
  const auto mark = node.Mark();
  return mark.line < 0 ? 0 : static_cast<std::size_t>(mark.line) + 1;
}

[[noreturn]] inline void fail(const std::string& source, const YAML::Node& node,
                              const std::string& what) {
  throw ConfigError(source, line_of(node), what);
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& source, std::string_view key) {
  if (!node.IsScalar()) fail(source, node, std::string(key) + ": expected a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(source, node, std::string(key) + ": cannot read '" + node.Scalar() + "'");
  }
}

inline void require_map(const YAML::Node& node, const std::string& source, std::string_view what) {
  if (!node.IsMap()) fail(source, node, std::string(what) + ": expected a mapping");
}

// Rejects keys not in `allowed` (typos would otherwise be silently ignored).
inline void check_keys(const YAML::Node& map, const std::string& source,
                       std::span<const std::string_view> allowed,
                       std::span<const std::string_view> also = {}) {
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    for (auto a : also) ok = ok || key == a;
    if (!ok) fail(source, kv.first, "unknown key '" + key + "'");
  }
}

inline void check_keys(const YAML::Node& map, const std::string& source,
                       std::initializer_list<std::string_view> allowed) {
  check_keys(map, source, std::span<const std::string_view>(allowed.begin(), allowed.size()));
}

inline constexpr std::string_view kChannelKeys[] = {
    "mu", "nu", "q_factor", "eta_d", "p_dark", "e_optical",
    "length_km", "loss_db", "alpha_db_per_km", "excess_db"};

// Overlays channel fields found in `map` onto `base`. Loss resolution:
// explicit loss_db wins; otherwise a given length_km derives
// alpha_db_per_km * length_km + excess_db.
inline ChannelParams parse_channel(const YAML::Node& map, ChannelParams base,
                                   const std::string& source) {
  auto get = [&](const char* key, double& field) {
    if (map[key]) field = scalar<double>(map[key], source, key);
  };
  get("mu", base.mu);
  get("nu", base.nu);
  get("q_factor", base.q_factor);
  get("eta_d", base.eta_d);
  get("p_dark", base.p_dark);
  get("e_optical", base.e_optical);
  get("length_km", base.length_km);
  if (map["loss_db"]) {
    base.loss_db = scalar<double>(map["loss_db"], source, "loss_db");
  } else if (map["length_km"] || map["alpha_db_per_km"] || map["excess_db"]) {
    double alpha = kDefaultAttenuationDbPerKm;
    double excess = 0.0;
    get("alpha_db_per_km", alpha);
    get("excess_db", excess);
    if (alpha < 0 || excess < 0) fail(source, map, "alpha_db_per_km and excess_db must be >= 0");
    base.loss_db = alpha * base.length_km + excess;
  }
  try {
    base.validate();
  } catch (const std::invalid_argument& e) {
    // point at the offending entry when it is spelled out in this map
    const std::string msg = e.what();
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (msg.find(": " + key + " ") != std::string::npos) fail(source, kv.second, msg);
    }
    fail(source, map, msg);
  }
  return base;
}

inline InterceptResendConfig parse_adversary(const YAML::Node& map, const std::string& source) {
  require_map(map, source, "adversary");
  check_keys(map, source, {"intercept_fraction", "basis_strategy"});
  InterceptResendConfig cfg;
  if (map["intercept_fraction"]) {
    cfg.intercept_fraction = scalar<double>(map["intercept_fraction"], source, "intercept_fraction");
  }
  if (map["basis_strategy"]) {
    const auto s = scalar<std::string>(map["basis_strategy"], source, "basis_strategy");
    if (s != "uniform_random") fail(source, map["basis_strategy"], "unsupported basis_strategy '" + s + "'");
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    fail(source, map, e.what());
  }
  return cfg;
}

// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void emit_channel(YAML::Emitter& out, const ChannelParams& c) {
  out << YAML::Key << "mu" << YAML::Value << format_double(c.mu);
  out << YAML::Key << "nu" << YAML::Value << format_double(c.nu);
  out << YAML::Key << "q_factor" << YAML::Value << format_double(c.q_factor);
  out << YAML::Key << "length_km" << YAML::Value << format_double(c.length_km);
  out << YAML::Key << "loss_db" << YAML::Value << format_double(c.loss_db);
  out << YAML::Key << "eta_d" << YAML::Value << format_double(c.eta_d);
  out << YAML::Key << "p_dark" << YAML::Value << format_double(c.p_dark);
  out << YAML::Key << "e_optical" << YAML::Value << format_double(c.e_optical);
}

inline void emit_adversary(YAML::Emitter& out, const InterceptResendConfig& a) {
  out << YAML::BeginMap;
  out << YAML::Key << "intercept_fraction" << YAML::Value << format_double(a.intercept_fraction);
  out << YAML::Key << "basis_strategy" << YAML::Value << "uniform_random";
  out << YAML::EndMap;
}

inline YAML::Node load_yaml(std::string_view text, const std::string& source) {
  try {
    return YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    const std::size_t line = e.mark.line < 0 ? 0 : static_cast<std::size_t>(e.mark.line) + 1;
    throw ConfigError(source, line, e.msg);
  }
}

}  // namespace qkdnet::detail
