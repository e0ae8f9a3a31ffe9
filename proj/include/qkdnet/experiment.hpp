#pragma once

// Config-driven experiments behind the command-line tool.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qkdnet/adversary.hpp"
#include "qkdnet/channel.hpp"
#include "qkdnet/session.hpp"

namespace qkdnet {

inline constexpr std::string_view kConfigSchema = "qkdnet-experiment/1";
inline constexpr std::string_view kResultSchema = "qkdnet-result/1";

enum class Mode : std::uint8_t { link_budget, bb84, protocol_a, protocol_a_chain, protocol_b };
enum class OutputFormat : std::uint8_t { csv, json };

std::string_view to_string(Mode mode) noexcept;
std::string_view to_string(OutputFormat format) noexcept;
std::optional<Mode> parse_mode(std::string_view text) noexcept;
std::optional<OutputFormat> parse_format(std::string_view text) noexcept;

// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitRuntimeError = 1,
  kExitConfigError = 2,
  kExitProtocolAbort = 3,
};

struct ExperimentConfig {
  Mode mode = Mode::bb84;
  std::uint64_t seed = 0;
  std::uint64_t n_pulses = 100000;
  OutputFormat format = OutputFormat::csv;
  std::string output;  // empty: standard output

  ChannelParams channel;               // link under test; access links of generated topologies
  std::optional<ChannelParams> trunk;  // inter-QBS links of generated topologies
  std::optional<InterceptResendConfig> adversary;  // bb84 only
  DistillOptions distill;

  std::string topology_file;  // empty: generated linear chain
  std::uint64_t cells = 1;    // generated chain length (protocol_b)
  std::string from;           // endpoints, required with topology_file
  std::string to;
  std::uint64_t n_qbs = 1;    // protocol_a_chain
  // protocol_a_chain: n_qbs per point; protocol_b: cells per point.
  std::vector<std::uint64_t> sweep;

  std::uint64_t provision_pulses = 100000;  // per pairwise BB84 session (protocol_b)
  bool include_sequences = false;           // JSON transcripts

  bool operator==(const ExperimentConfig&) const = default;
};

// Parses a YAML experiment config. The seed is mandatory. Throws ConfigError
// carrying the line of the offending entry. A relative topology path is
// resolved against `base_dir` when given.
ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>",
                              const std::string& base_dir = {});
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

struct ExperimentResult {
  std::string artifact;
  std::size_t points = 0;
  std::size_t aborted_points = 0;
};

// Deterministic: equal configs give byte-identical artifacts. Sweep point i
// runs on seed derive_seed(config.seed, i), independent of other points.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Frozen column order of the CSV/JSON result tables.
const std::vector<std::string>& link_budget_columns();
const std::vector<std::string>& session_columns();

using Cell = std::variant<std::monostate, std::int64_t, std::uint64_t, double, bool, std::string>;

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

std::string render_csv(const ResultTable& table, const std::string& preamble = {});

}  // namespace qkdnet
