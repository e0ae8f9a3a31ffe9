#pragma once

// Quantum channel and detector model: fiber loss, Poissonian photon
// statistics, dark counts and QBER bookkeeping.

#include <cstdint>
#include <optional>
#include <vector>

#include "qkdnet/random.hpp"

namespace qkdnet {

// Default attenuation: 11 dB over a 25 km spool.
inline constexpr double kDefaultAttenuationDbPerKm = 11.0 / 25.0;

double fiber_loss_db(double length_km, double alpha_db_per_km = kDefaultAttenuationDbPerKm,
                     double excess_db = 0.0);

struct ChannelParams {
  double mu = 0.1;          // mean photon number per pulse
  double nu = 5.0e6;        // repetition frequency [Hz]
  double q_factor = 0.5;    // sifting factor of the protocol
  double loss_db = 0.0;     // total channel loss [dB]
  double length_km = 0.0;
  double eta_d = 1.0;       // detector quantum efficiency
  double p_dark = 0.0;      // dark-count probability per gate
  double e_optical = 0.0;   // error probability of a signal click

  // Throws std::invalid_argument naming the first violated bound.
  void validate() const;

  // Ideal lossless, noiseless unit-efficiency link.
  static ChannelParams ideal(double mu = 0.1);

  // Loss derived from a fiber of the given length.
  static ChannelParams fiber(double length_km, double alpha_db_per_km = kDefaultAttenuationDbPerKm,
                             double excess_db = 0.0);

  bool operator==(const ChannelParams&) const = default;
};

// eta_t = 10^(-loss/10). Throws std::domain_error for negative loss.
double transmittance(double loss_db);

// q * mu * nu * eta_t * eta_d  [Hz]
double raw_key_rate(const ChannelParams& params);

// 1 - exp(-mu * eta_t * eta_d)
double signal_detection_probability(const ChannelParams& params);

// Probability that a gate clicks at all (signal, or dark count otherwise).
double click_probability(const ChannelParams& params);

// Closed-form QBER of the detection model on matched-basis positions.
double expected_qber(const ChannelParams& params);

enum class Detection : std::uint8_t { none, correct_click, error_click };

struct DetectionTally {
  std::uint64_t pulses_sent = 0;
  std::uint64_t detections = 0;
  std::uint64_t false_counts = 0;
  std::uint64_t correct_counts = 0;

  void record(Detection d);
  bool consistent() const noexcept {
    return detections == false_counts + correct_counts && detections <= pulses_sent;
  }
  bool operator==(const DetectionTally&) const = default;
};

// false / (false + correct). Throws NoDataError when nothing was detected.
double qber(const DetectionTally& tally);

// One gate: signal click with p_sig, else a dark click with p_dark. Signal
// clicks err with e_optical, dark clicks with 1/2.
Detection simulate_pulse(const ChannelParams& params, Rng& rng);

DetectionTally simulate_tally(const ChannelParams& params, std::uint64_t pulses, Rng& rng);

enum class ClickOrigin : std::uint8_t { signal, dark };

struct DetectionEvent {
  std::uint64_t pulse;
  ClickOrigin origin;
};

// All clicking gates among `pulses`, in increasing pulse order. Gaps between
// clicks are drawn geometrically, so cost scales with the number of clicks
// rather than the number of pulses. Distributionally identical to calling
// simulate_pulse once per gate.
std::vector<DetectionEvent> sample_detections(const ChannelParams& params, std::uint64_t pulses,
                                              Rng& rng);

// Tally over `pulses` gates built from sample_detections; same distribution
// as simulate_tally at a cost proportional to the number of clicks.
DetectionTally sample_tally(const ChannelParams& params, std::uint64_t pulses, Rng& rng);

// Calibration helpers. Each returns the parameter value that makes the
// analytic model hit the target, or nullopt when no value in range does.
std::optional<double> fit_detector_efficiency(const ChannelParams& params, double target_rate_hz);
std::optional<double> fit_optical_error(const ChannelParams& params, double target_qber);
std::optional<double> fit_dark_count(const ChannelParams& params, double target_qber);

}  // namespace qkdnet
