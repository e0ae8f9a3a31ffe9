#pragma once

// Calibration report against the published field trials of other groups.
// Their hardware is unknown, so detector efficiency and one noise parameter
// are fitted per row; the report labels them as fitted.

#include <cstdint>
#include <string>
#include <vector>

#include "qkdnet/channel.hpp"
#include "qkdnet/experiment.hpp"

namespace qkdnet {

struct TrialTarget {
  std::string group;
  double length_km;
  double mu;
  double rate_hz;
  double qber;
};

// Geneva, BT, Los Alamos.
const std::vector<TrialTarget>& trial_targets();

struct TrialFit {
  TrialTarget target;
  ChannelParams channel;              // fitted parameters
  std::vector<std::string> fitted;    // names of fitted fields
  double analytic_rate_hz = 0;
  double analytic_qber = 0;
  std::uint64_t pulses = 0;
  std::uint64_t detections = 0;
  double simulated_rate_hz = 0;  // signal clicks only
  double simulated_qber = 0;
};

// Fixed starting point before fitting: q = 1/2, 5 MHz, 0.44 dB/km, dark
// count 1e-5. Detector efficiency is fitted to the rate. Optical error is
// then fitted to the QBER; when dark counts alone already exceed it the
// optical error is pinned to 0 and the dark count is fitted instead.
TrialFit fit_trial(const TrialTarget& target);

// (value - target) / target
double relative_deviation(double value, double target);

// Fits every row and simulates `pulses` gates each on derive_seed(seed, row).
std::vector<TrialFit> calibrate_trials(std::uint64_t seed, std::uint64_t pulses);

const std::vector<std::string>& trial_columns();
ResultTable trial_table(const std::vector<TrialFit>& fits);

// Whole artifact, CSV or JSON, deterministic in (seed, pulses).
std::string trial_report(std::uint64_t seed, std::uint64_t pulses, OutputFormat format);

}  // namespace qkdnet
