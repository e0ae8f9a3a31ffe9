#include "qkdnet/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "qkdnet/errors.hpp"

namespace qkdnet {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("channel: ") + what);
}

}  // namespace

double fiber_loss_db(double length_km, double alpha_db_per_km, double excess_db) {
  if (length_km < 0 || alpha_db_per_km < 0 || excess_db < 0) {
    throw std::domain_error("fiber_loss_db: negative length, attenuation or excess loss");
  }
  return alpha_db_per_km * length_km + excess_db;
}

void ChannelParams::validate() const {
  require(mu > 0, "mu must be > 0");
  require(nu > 0, "nu must be > 0");
  require(q_factor > 0 && q_factor <= 1, "q_factor must be in (0, 1]");
  require(eta_d >= 0 && eta_d <= 1, "eta_d must be in [0, 1]");
  require(p_dark >= 0 && p_dark <= 1, "p_dark must be in [0, 1]");
  require(e_optical >= 0 && e_optical <= 0.5, "e_optical must be in [0, 0.5]");
  require(loss_db >= 0, "loss_db must be >= 0");
  require(length_km >= 0, "length_km must be >= 0");
}

ChannelParams ChannelParams::ideal(double mu) {
  ChannelParams p;
  p.mu = mu;
  return p;
}

ChannelParams ChannelParams::fiber(double length_km, double alpha_db_per_km, double excess_db) {
  ChannelParams p;
  p.length_km = length_km;
  p.loss_db = fiber_loss_db(length_km, alpha_db_per_km, excess_db);
  return p;
}

double transmittance(double loss_db) {
  if (!(loss_db >= 0)) throw std::domain_error("transmittance: loss_db must be >= 0");
  return std::pow(10.0, -loss_db / 10.0);
}

double raw_key_rate(const ChannelParams& params) {
  params.validate();
  return params.q_factor * params.mu * params.nu * transmittance(params.loss_db) * params.eta_d;
}

double signal_detection_probability(const ChannelParams& params) {
  return -std::expm1(-params.mu * transmittance(params.loss_db) * params.eta_d);
}

double click_probability(const ChannelParams& params) {
  const double p_sig = signal_detection_probability(params);
  return p_sig + (1.0 - p_sig) * params.p_dark;
}

double expected_qber(const ChannelParams& params) {
  const double p_sig = signal_detection_probability(params);
  const double p_click = p_sig + (1.0 - p_sig) * params.p_dark;
  if (p_click <= 0) throw NoDataError("expected_qber: channel never clicks");
  return (p_sig * params.e_optical + 0.5 * (1.0 - p_sig) * params.p_dark) / p_click;
}

void DetectionTally::record(Detection d) {
  ++pulses_sent;
  switch (d) {
    case Detection::none:
      break;
    case Detection::correct_click:
      ++detections;
      ++correct_counts;
      break;
    case Detection::error_click:
      ++detections;
      ++false_counts;
      break;
  }
}

double qber(const DetectionTally& tally) {
  const std::uint64_t total = tally.false_counts + tally.correct_counts;
  if (total == 0) throw NoDataError("qber: no detections recorded");
  return static_cast<double>(tally.false_counts) / static_cast<double>(total);
}

Detection simulate_pulse(const ChannelParams& params, Rng& rng) {
  const double p_sig = signal_detection_probability(params);
  if (rng.bernoulli(p_sig)) {
    return rng.bernoulli(params.e_optical) ? Detection::error_click : Detection::correct_click;
  }
  if (rng.bernoulli(params.p_dark)) {
    return rng.bit() ? Detection::error_click : Detection::correct_click;
  }
  return Detection::none;
}

DetectionTally simulate_tally(const ChannelParams& params, std::uint64_t pulses, Rng& rng) {
  params.validate();
  DetectionTally tally;
  for (std::uint64_t i = 0; i < pulses; ++i) tally.record(simulate_pulse(params, rng));
  return tally;
}

std::vector<DetectionEvent> sample_detections(const ChannelParams& params, std::uint64_t pulses,
                                              Rng& rng) {
  params.validate();
  const double p_sig = signal_detection_probability(params);
  const double p_click = p_sig + (1.0 - p_sig) * params.p_dark;
  const double signal_share = p_click > 0 ? p_sig / p_click : 0.0;

  std::vector<DetectionEvent> events;
  if (p_click <= 0 || pulses == 0) return events;
  events.reserve(static_cast<std::size_t>(std::min<double>(
      static_cast<double>(pulses), static_cast<double>(pulses) * p_click * 1.1 + 64)));

  std::uint64_t pos = 0;
  while (true) {
    const std::uint64_t gap = rng.geometric(p_click);
    if (gap >= pulses - pos) break;
    pos += gap;
    const ClickOrigin origin = rng.bernoulli(signal_share) ? ClickOrigin::signal : ClickOrigin::dark;
    events.push_back({pos, origin});
    if (++pos >= pulses) break;
  }
  return events;
}

DetectionTally sample_tally(const ChannelParams& params, std::uint64_t pulses, Rng& rng) {
  DetectionTally tally;
  tally.pulses_sent = pulses;
  for (const auto& ev : sample_detections(params, pulses, rng)) {
    const bool error = ev.origin == ClickOrigin::signal ? rng.bernoulli(params.e_optical) : rng.bit() == 1;
    ++tally.detections;
    ++(error ? tally.false_counts : tally.correct_counts);
  }
  return tally;
}

std::optional<double> fit_detector_efficiency(const ChannelParams& params, double target_rate_hz) {
  const double per_unit = params.q_factor * params.mu * params.nu * transmittance(params.loss_db);
  if (per_unit <= 0 || target_rate_hz <= 0) return std::nullopt;
  const double eta = target_rate_hz / per_unit;
  if (eta > 1.0) return std::nullopt;
  return eta;
}

std::optional<double> fit_optical_error(const ChannelParams& params, double target_qber) {
  const double p_sig = signal_detection_probability(params);
  if (p_sig <= 0) return std::nullopt;
  const double p_click = p_sig + (1.0 - p_sig) * params.p_dark;
  const double e = (target_qber * p_click - 0.5 * (1.0 - p_sig) * params.p_dark) / p_sig;
  if (e < 0 || e > 0.5) return std::nullopt;
  return e;
}

std::optional<double> fit_dark_count(const ChannelParams& params, double target_qber) {
  const double p_sig = signal_detection_probability(params);
  if (p_sig <= 0 || p_sig >= 1) return std::nullopt;
  if (target_qber < params.e_optical || target_qber >= 0.5) return std::nullopt;
  const double p_dark =
      p_sig * (target_qber - params.e_optical) / ((1.0 - p_sig) * (0.5 - target_qber));
  if (p_dark > 1.0) return std::nullopt;
  return p_dark;
}

}  // namespace qkdnet
