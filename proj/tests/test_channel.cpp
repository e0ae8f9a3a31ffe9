#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "qkdnet/channel.hpp"
#include "qkdnet/errors.hpp"
#include "support.hpp"

using namespace qkdnet;
using qkdnet::testing::binomial_band;

namespace {

ChannelParams reference_link() {
  ChannelParams c;
  c.loss_db = 11.0;
  c.length_km = 25.0;
  c.eta_d = 0.024675;
  c.p_dark = 1e-5;
  c.e_optical = 0.021788;
  return c;
}

}  // namespace

TEST_SUITE("channel") {

TEST_CASE("transmittance converts dB to a linear factor") {
  CHECK(transmittance(0.0) == 1.0);
  CHECK(transmittance(11.0) == doctest::Approx(0.0794328).epsilon(1e-6));
  CHECK(transmittance(3.0103) == doctest::Approx(0.5).epsilon(1e-5));
  CHECK_THROWS_AS(transmittance(-0.1), std::domain_error);
}

TEST_CASE("fiber loss defaults to 0.44 dB/km") {
  CHECK(fiber_loss_db(25.0) == doctest::Approx(11.0));
  CHECK(fiber_loss_db(22.8) == doctest::Approx(10.032));
  CHECK(fiber_loss_db(10.0, 0.2, 1.5) == doctest::Approx(3.5));
  const auto c = ChannelParams::fiber(25.0);
  CHECK(c.loss_db == doctest::Approx(11.0));
  CHECK(c.length_km == 25.0);
}

TEST_CASE("raw key rate") {
  ChannelParams c;
  CHECK(raw_key_rate(c) == doctest::Approx(250000.0));

  // detector efficiency inverted from 490 Hz at 11 dB
  const double inverted = 490.0 / (0.5 * 0.1 * 5e6 * std::pow(10.0, -1.1));
  CHECK(inverted == doctest::Approx(0.02467494).epsilon(1e-6));
  c.loss_db = 11.0;
  c.eta_d = 0.02468;
  CHECK(raw_key_rate(c) == doctest::Approx(490.0).epsilon(0.01));
  CHECK(raw_key_rate(reference_link()) == doctest::Approx(490.0).epsilon(1e-4));

  // Geneva distance with the same detector: 612 Hz, not within 15% of 486
  c = reference_link();
  c.loss_db = fiber_loss_db(22.8);
  const double geneva = 0.5 * 0.1 * 5e6 * std::pow(10.0, -1.0032) * 0.024675;
  CHECK(raw_key_rate(c) == doctest::Approx(geneva).epsilon(1e-12));
  CHECK(raw_key_rate(c) == doctest::Approx(612.35).epsilon(1e-3));
}

TEST_CASE("raw key rate is monotone in each factor") {
  const ChannelParams base = reference_link();
  for (double step : {0.5, 1.0, 3.0}) {
    ChannelParams lossier = base;
    lossier.loss_db += step;
    CHECK(raw_key_rate(lossier) < raw_key_rate(base));
    for (int field = 0; field < 4; ++field) {
      ChannelParams up = base;
      double* f = field == 0 ? &up.q_factor : field == 1 ? &up.mu : field == 2 ? &up.nu : &up.eta_d;
      *f *= 1.0 + step / 10.0;
      CHECK(raw_key_rate(up) > raw_key_rate(base));
    }
  }
}

TEST_CASE("validation rejects out-of-range parameters") {
  ChannelParams c;
  c.eta_d = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ChannelParams{};
  c.loss_db = -1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ChannelParams{};
  c.p_dark = -1e-9;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_NOTHROW(reference_link().validate());
}

TEST_CASE("qber of a tally") {
  CHECK(qber(DetectionTally{1000, 1000, 0, 1000}) == 0.0);
  CHECK(qber(DetectionTally{1000, 1000, 45, 955}) == doctest::Approx(0.045));
  CHECK(qber(DetectionTally{4, 4, 1, 3}) == 0.25);
  CHECK_THROWS_AS(qber(DetectionTally{100, 0, 0, 0}), NoDataError);
  // scale invariance
  for (std::uint64_t k : {2u, 7u, 1000u}) {
    CHECK(qber(DetectionTally{4 * k, 4 * k, k, 3 * k}) == doctest::Approx(0.25));
  }
}

TEST_CASE("simulate_pulse: no signal, no noise never clicks") {
  ChannelParams c;
  c.eta_d = 0;  // no signal reaches the detector
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) REQUIRE(simulate_pulse(c, rng) == Detection::none);
}

TEST_CASE("simulate_pulse click probability matches 1 - exp(-mu)") {
  ChannelParams c;  // ideal, mu = 0.1
  Rng rng(2);
  const std::uint64_t n = 1'000'000;
  const DetectionTally t = simulate_tally(c, n, rng);
  const double p = 1.0 - std::exp(-0.1);
  CHECK(t.consistent());
  CHECK(t.false_counts == 0);
  CHECK(std::abs(static_cast<double>(t.detections) / n - p) < binomial_band(p, n));
}

TEST_CASE("dark counts alone: half of them err") {
  ChannelParams c;
  c.eta_d = 0;  // no signal reaches the detector
  c.p_dark = 1e-5;
  Rng rng(3);
  const std::uint64_t n = 200'000'000;
  const DetectionTally t = sample_tally(c, n, rng);
  const double rate = static_cast<double>(t.false_counts) / n;
  CHECK(std::abs(rate - 5e-6) < binomial_band(5e-6, n, 4));
  CHECK(qber(t) == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("click rate converges within 4 sigma, both samplers") {
  const ChannelParams c = reference_link();
  const double p = click_probability(c);
  CHECK(p == doctest::Approx(signal_detection_probability(c) +
                             (1 - signal_detection_probability(c)) * c.p_dark));
  const std::uint64_t n = 2'000'000;
  Rng a(4), b(5);
  const auto direct = simulate_tally(c, n, a);
  const auto gaps = sample_tally(c, 50 * n, b);
  CHECK(std::abs(static_cast<double>(direct.detections) / n - p) < binomial_band(p, n, 4));
  CHECK(std::abs(static_cast<double>(gaps.detections) / (50 * n) - p) < binomial_band(p, 50 * n, 4));
}

TEST_CASE("gap sampler reproduces per-gate outcome frequencies") {
  ChannelParams c;
  c.mu = 0.5;
  c.eta_d = 0.3;
  c.p_dark = 0.01;
  c.e_optical = 0.05;
  const std::uint64_t n = 1'000'000;
  Rng a(10), b(11);
  const auto x = simulate_tally(c, n, a);
  const auto y = sample_tally(c, n, b);
  const double p = click_probability(c);
  CHECK(std::abs(static_cast<double>(x.detections) - static_cast<double>(y.detections)) / n <
        binomial_band(p, n, 4) * std::sqrt(2.0));
  CHECK(qber(x) == doctest::Approx(expected_qber(c)).epsilon(0.05));
  CHECK(qber(y) == doctest::Approx(expected_qber(c)).epsilon(0.05));
}

TEST_CASE("sample_detections is ordered, bounded and seed-deterministic") {
  const ChannelParams c = reference_link();
  Rng a(6), b(6);
  const auto x = sample_detections(c, 10'000'000, a);
  const auto y = sample_detections(c, 10'000'000, b);
  REQUIRE(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    REQUIRE(x[i].pulse == y[i].pulse);
    REQUIRE(x[i].pulse < 10'000'000);
    if (i) REQUIRE(x[i].pulse > x[i - 1].pulse);
  }
}

TEST_CASE("simulated QBER with no dark counts equals e_optical") {
  ChannelParams c;
  c.e_optical = 0.03;
  Rng rng(7);
  const std::uint64_t n = 5'000'000;
  const auto t = sample_tally(c, n, rng);
  CHECK(std::abs(qber(t) - 0.03) < binomial_band(0.03, t.detections, 4));
}

TEST_CASE("linear regime: sifted-detection rate approaches the raw key rate") {
  ChannelParams c = reference_link();
  c.p_dark = 0;
  Rng rng(8);
  const std::uint64_t n = 20'000'000;
  const auto t = sample_tally(c, n, rng);
  const double rate = static_cast<double>(t.detections) * c.q_factor * c.nu / n;
  CHECK(rate == doctest::Approx(raw_key_rate(c)).epsilon(0.05));
}

TEST_CASE("calibration fits invert the model") {
  ChannelParams c = reference_link();
  const auto eta = fit_detector_efficiency(c, 490.0);
  REQUIRE(eta);
  CHECK(*eta == doctest::Approx(0.0246749381).epsilon(1e-8));

  const auto e = fit_optical_error(c, 0.045);
  REQUIRE(e);
  CHECK(*e == doctest::Approx(0.02178799).epsilon(1e-5));
  c.e_optical = *e;
  CHECK(expected_qber(c) == doctest::Approx(0.045).epsilon(1e-12));

  // dark counts alone exceed 2%: optical error cannot be fitted
  c.mu = 0.15;
  c.eta_d = *fit_detector_efficiency(c, 500.0);
  CHECK_FALSE(fit_optical_error(c, 0.02));
  c.e_optical = 0;
  const auto dark = fit_dark_count(c, 0.02);
  REQUIRE(dark);
  c.p_dark = *dark;
  CHECK(expected_qber(c) == doctest::Approx(0.02).epsilon(1e-10));
}

TEST_CASE("identical seed and parameters give an identical tally") {
  const ChannelParams c = reference_link();
  Rng a(99), b(99);
  CHECK(sample_tally(c, 100'000'000, a) == sample_tally(c, 100'000'000, b));
  Rng x(99), y(99);
  CHECK(simulate_tally(c, 100'000, x) == simulate_tally(c, 100'000, y));
}

TEST_CASE("derived seeds are distinct and stable") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(1, 5) == derive_seed(1, 5));
  Rng r(12);
  for (int i = 0; i < 1000; ++i) REQUIRE(r.below(7) < 7);
  CHECK(r.geometric(0.0) == std::numeric_limits<std::uint64_t>::max());
  CHECK(r.geometric(1.0) == 0);
}

}  // TEST_SUITE
