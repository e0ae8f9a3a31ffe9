#include "qkdnet/calibration.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "qkdnet/json_export.hpp"

namespace qkdnet {

const std::vector<TrialTarget>& trial_targets() {
  static const std::vector<TrialTarget> rows{
      {"Geneva", 22.8, 0.1, 486.0, 0.045},
      {"BT", 25.0, 0.15, 500.0, 0.02},
      {"Los Alamos", 24.0, 0.4, 20.0, 0.016},
  };
  return rows;
}

TrialFit fit_trial(const TrialTarget& target) {
  TrialFit fit;
  fit.target = target;
  ChannelParams c = ChannelParams::fiber(target.length_km);
  c.mu = target.mu;
  c.nu = 5.0e6;
  c.q_factor = 0.5;
  c.p_dark = 1e-5;
  c.e_optical = 0;

  const auto eta = fit_detector_efficiency(c, target.rate_hz);
  if (!eta) throw std::runtime_error("no detector efficiency reaches " + target.group + " rate");
  c.eta_d = *eta;
  fit.fitted.push_back("eta_d");

  if (const auto e = fit_optical_error(c, target.qber)) {
    c.e_optical = *e;
    fit.fitted.push_back("e_optical");
  } else {
    c.e_optical = 0;
    const auto dark = fit_dark_count(c, target.qber);
    if (!dark) throw std::runtime_error("no dark count reaches " + target.group + " QBER");
    c.p_dark = *dark;
    fit.fitted.push_back("p_dark");
  }
  c.validate();
  fit.channel = c;
  fit.analytic_rate_hz = raw_key_rate(c);
  fit.analytic_qber = expected_qber(c);
  return fit;
}

double relative_deviation(double value, double target) {
  if (target == 0) throw std::invalid_argument("relative_deviation: zero target");
  return (value - target) / target;
}

std::vector<TrialFit> calibrate_trials(std::uint64_t seed, std::uint64_t pulses) {
  std::vector<TrialFit> out;
  const auto& targets = trial_targets();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    TrialFit fit = fit_trial(targets[i]);
    if (pulses > 0) {
      Rng rng(derive_seed(seed, i));
      // rate from signal clicks only (the raw-rate formula has no dark term),
      // QBER over every click
      std::uint64_t signal = 0, errors = 0, clicks = 0;
      for (const auto& ev : sample_detections(fit.channel, pulses, rng)) {
        const bool from_signal = ev.origin == ClickOrigin::signal;
        const bool error = from_signal ? rng.bernoulli(fit.channel.e_optical) : rng.bit() == 1;
        ++clicks;
        signal += from_signal;
        errors += error;
      }
      fit.pulses = pulses;
      fit.detections = clicks;
      fit.simulated_rate_hz = static_cast<double>(signal) * fit.channel.q_factor * fit.channel.nu /
                              static_cast<double>(pulses);
      fit.simulated_qber = clicks > 0 ? static_cast<double>(errors) / static_cast<double>(clicks) : 0.0;
    }
    out.push_back(std::move(fit));
  }
  return out;
}

const std::vector<std::string>& trial_columns() {
  static const std::vector<std::string> cols{
      "group",          "length_km",        "mu",
      "target_rate_hz", "target_qber",      "fitted",
      "eta_d",          "p_dark",           "e_optical",
      "loss_db",        "analytic_rate_hz", "analytic_qber",
      "analytic_rate_deviation", "analytic_qber_deviation", "pulses",
      "detections",     "simulated_rate_hz", "simulated_qber",
      "simulated_rate_deviation", "simulated_qber_deviation"};
  return cols;
}

ResultTable trial_table(const std::vector<TrialFit>& fits) {
  ResultTable table{trial_columns(), {}};
  for (const auto& f : fits) {
    std::string fitted;
    for (const auto& name : f.fitted) fitted += (fitted.empty() ? "" : ";") + name;
    const bool simulated = f.pulses > 0;
    table.rows.push_back({f.target.group,
                          f.target.length_km,
                          f.target.mu,
                          f.target.rate_hz,
                          f.target.qber,
                          fitted,
                          f.channel.eta_d,
                          f.channel.p_dark,
                          f.channel.e_optical,
                          f.channel.loss_db,
                          f.analytic_rate_hz,
                          f.analytic_qber,
                          relative_deviation(f.analytic_rate_hz, f.target.rate_hz),
                          relative_deviation(f.analytic_qber, f.target.qber),
                          f.pulses,
                          f.detections,
                          simulated ? Cell{f.simulated_rate_hz} : Cell{},
                          simulated ? Cell{f.simulated_qber} : Cell{},
                          simulated ? Cell{relative_deviation(f.simulated_rate_hz, f.target.rate_hz)} : Cell{},
                          simulated ? Cell{relative_deviation(f.simulated_qber, f.target.qber)} : Cell{}});
  }
  return table;
}

std::string trial_report(std::uint64_t seed, std::uint64_t pulses, OutputFormat format) {
  const ResultTable table = trial_table(calibrate_trials(seed, pulses));
  if (format == OutputFormat::csv) {
    const std::string preamble = "# " + std::string(kResultSchema) + "\n# mode: calibrate\n# seed: " +
                                 std::to_string(seed) + "\n# pulses: " + std::to_string(pulses) +
                                 "\n# parameters listed in 'fitted' are calibrated, not predicted\n";
    return render_csv(table, preamble);
  }
  nlohmann::ordered_json j;
  j["schema"] = kResultSchema;
  j["mode"] = "calibrate";
  j["config"] = {{"seed", seed}, {"pulses", pulses}};
  j["columns"] = table.columns;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json o;
    for (std::size_t i = 0; i < row.size(); ++i) {
      o[table.columns[i]] = std::visit(
          [](const auto& v) -> nlohmann::ordered_json {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, std::monostate>) {
              return nullptr;
            } else {
              return v;
            }
          },
          row[i]);
    }
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace qkdnet
