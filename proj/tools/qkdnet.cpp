// qkdnet: run link-budget, BB84 and network experiments from YAML configs.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "qkdnet/errors.hpp"
#include "qkdnet/experiment.hpp"
#include "qkdnet/calibration.hpp"

namespace {

using namespace qkdnet;

void write_artifact(const std::string& artifact, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << artifact;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << artifact;
}

std::optional<OutputFormat> format_option(const std::string& text) {
  if (text.empty()) return std::nullopt;
  auto f = parse_format(text);
  if (!f) throw ConfigError("--format", 0, "expected csv or json, got '" + text + "'");
  return f;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum key distribution link and network simulator"};
  app.require_subcommand(1);
  int verbosity = 0;
  app.add_flag("-v,--verbose", verbosity, "Progress on stderr");

  auto* run = app.add_subcommand("run", "Run an experiment config");
  std::string config_path, mode_text, format_text, output;
  std::optional<std::uint64_t> seed;
  run->add_option("-c,--config", config_path, "Experiment config (YAML)")->required();
  run->add_option("-m,--mode", mode_text,
                  "Override mode: link_budget, bb84, protocol_a, protocol_a_chain, protocol_b");
  run->add_option("-s,--seed", seed, "Override the config seed");
  run->add_option("-f,--format", format_text, "csv or json");
  run->add_option("-o,--output", output, "Output path ('-' for stdout)");

  auto* calibrate = app.add_subcommand("calibrate", "Fitted calibration against published field trials");
  std::uint64_t cal_seed = 1;
  std::uint64_t cal_pulses = 10'000'000'000;
  std::string cal_format, cal_output;
  calibrate->add_option("-s,--seed", cal_seed, "Simulation seed");
  calibrate->add_option("-n,--pulses", cal_pulses, "Simulated gates per row");
  calibrate->add_option("-f,--format", cal_format, "csv or json");
  calibrate->add_option("-o,--output", cal_output, "Output path ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (*calibrate) {
      const auto fmt = format_option(cal_format).value_or(OutputFormat::csv);
      if (verbosity > 0) std::cerr << "calibrate: " << cal_pulses << " gates per row\n";
      write_artifact(trial_report(cal_seed, cal_pulses, fmt), cal_output);
      return kExitOk;
    }

    ExperimentConfig cfg = load_config(config_path);
    bool overridden = false;
    if (!mode_text.empty()) {
      auto m = parse_mode(mode_text);
      if (!m) throw ConfigError("--mode", 0, "unknown mode '" + mode_text + "'");
      cfg.mode = *m;
      overridden = true;
    }
    if (seed) {
      cfg.seed = *seed;
      overridden = true;
    }
    if (auto f = format_option(format_text)) cfg.format = *f;
    if (!output.empty()) cfg.output = output;
    // re-check mode-dependent requirements after overrides
    if (overridden) cfg = parse_config(serialize_config(cfg), config_path + " (with overrides)");

    if (verbosity > 0) {
      std::cerr << "mode " << to_string(cfg.mode) << ", seed " << cfg.seed << ", "
                << cfg.n_pulses << " pulses\n";
    }
    const ExperimentResult result = run_experiment(cfg);
    write_artifact(result.artifact, cfg.output);
    if (verbosity > 0) {
      std::cerr << result.points << " point(s), " << result.aborted_points << " aborted\n";
    }
    return result.aborted_points > 0 ? kExitProtocolAbort : kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}
