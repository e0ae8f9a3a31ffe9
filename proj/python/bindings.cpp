// Python bindings. Transcripts and artifacts cross as JSON text and are
// decoded on the Python side.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qkdnet/channel.hpp"
#include "qkdnet/errors.hpp"
#include "qkdnet/experiment.hpp"
#include "qkdnet/json_export.hpp"
#include "qkdnet/privacy.hpp"
#include "qkdnet/relay.hpp"
#include "qkdnet/session.hpp"
#include "qkdnet/calibration.hpp"

namespace py = pybind11;
using namespace qkdnet;

namespace {

ChannelParams make_channel(double mu, double nu, double q_factor, double loss_db, double length_km,
                           double eta_d, double p_dark, double e_optical) {
  ChannelParams c{mu, nu, q_factor, loss_db, length_km, eta_d, p_dark, e_optical};
  c.validate();
  return c;
}

DistillOptions make_distill(double sample_fraction, std::size_t security_margin, double max_qber,
                            bool sift_only) {
  DistillOptions d;
  d.sample_fraction = sample_fraction;
  d.security_margin = security_margin;
  d.max_qber = max_qber;
  d.sift_only = sift_only;
  d.validate();
  return d;
}

std::string session_json(const SessionResult& r, bool sequences) {
  nlohmann::ordered_json j = to_json(r.transcript, sequences);
  j["key_a"] = to_bitstring(r.key_a.bits());
  j["key_b"] = to_bitstring(r.key_b.bits());
  return j.dump();
}

}  // namespace

PYBIND11_MODULE(_qkdnet, m) {
  m.doc() = "QKD link and cellular network simulator";

  // most specific last: later translators are tried first
  auto base = py::register_exception<QkdError>(m, "QkdError", PyExc_RuntimeError);
  py::register_exception<RoutingError>(m, "RoutingError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<ChannelParams>(m, "ChannelParams")
      .def(py::init(&make_channel), py::kw_only(), py::arg("mu") = 0.1, py::arg("nu") = 5.0e6,
           py::arg("q_factor") = 0.5, py::arg("loss_db") = 0.0, py::arg("length_km") = 0.0,
           py::arg("eta_d") = 1.0, py::arg("p_dark") = 0.0, py::arg("e_optical") = 0.0)
      .def_readonly("mu", &ChannelParams::mu)
      .def_readonly("nu", &ChannelParams::nu)
      .def_readonly("q_factor", &ChannelParams::q_factor)
      .def_readonly("loss_db", &ChannelParams::loss_db)
      .def_readonly("length_km", &ChannelParams::length_km)
      .def_readonly("eta_d", &ChannelParams::eta_d)
      .def_readonly("p_dark", &ChannelParams::p_dark)
      .def_readonly("e_optical", &ChannelParams::e_optical)
      .def_static("fiber", &ChannelParams::fiber, py::arg("length_km"),
                  py::arg("alpha_db_per_km") = kDefaultAttenuationDbPerKm, py::arg("excess_db") = 0.0)
      .def("__eq__", [](const ChannelParams& a, const ChannelParams& b) { return a == b; })
      .def("__repr__", [](const ChannelParams& c) {
        return "ChannelParams(mu=" + std::to_string(c.mu) + ", loss_db=" + std::to_string(c.loss_db) +
               ", eta_d=" + std::to_string(c.eta_d) + ")";
      });

  m.def("transmittance", &transmittance, py::arg("loss_db"));
  m.def("raw_key_rate", &raw_key_rate, py::arg("channel"));
  m.def("click_probability", &click_probability, py::arg("channel"));
  m.def("expected_qber", &expected_qber, py::arg("channel"));
  m.def("binary_entropy", &binary_entropy, py::arg("p"));
  m.def("final_key_length", &final_key_length, py::arg("n"), py::arg("qber"), py::arg("leaked_bits"),
        py::arg("security_margin") = kDefaultSecurityMargin);
  m.def("derive_seed", &derive_seed, py::arg("root"), py::arg("index"));

  m.def(
      "simulate_tally",
      [](const ChannelParams& c, std::uint64_t pulses, std::uint64_t seed) {
        Rng rng(seed);
        const DetectionTally t = sample_tally(c, pulses, rng);
        return py::dict(py::arg("pulses_sent") = t.pulses_sent, py::arg("detections") = t.detections,
                        py::arg("false_counts") = t.false_counts,
                        py::arg("correct_counts") = t.correct_counts);
      },
      py::arg("channel"), py::arg("pulses"), py::arg("seed"));

  m.def(
      "classify_bases",
      [](const std::string& a, const std::string& q, const std::string& b) {
        auto basis = [](const std::string& s) {
          if (s == "x") return Basis::sigma_x;
          if (s == "y") return Basis::sigma_y;
          throw py::value_error("basis must be 'x' or 'y'");
        };
        return std::string(to_string(classify_bases(basis(a), basis(q), basis(b))));
      },
      py::arg("qnc1"), py::arg("qbs"), py::arg("qnc2"));

  m.def(
      "run_bb84",
      [](const ChannelParams& c, std::uint64_t pulses, std::uint64_t seed, double intercept_fraction,
         double sample_fraction, std::size_t security_margin, double max_qber, bool sift_only,
         bool sequences) {
        Bb84Config cfg;
        cfg.channel = c;
        cfg.pulses = pulses;
        cfg.distill = make_distill(sample_fraction, security_margin, max_qber, sift_only);
        if (intercept_fraction > 0) {
          InterceptResendConfig eve;
          eve.intercept_fraction = intercept_fraction;
          eve.validate();
          cfg.adversary = eve;
        }
        Rng rng(seed);
        SessionResult r;
        {
          py::gil_scoped_release release;
          r = run_bb84(cfg, rng);
        }
        return session_json(r, sequences);
      },
      py::arg("channel"), py::arg("pulses"), py::arg("seed"), py::kw_only(),
      py::arg("intercept_fraction") = 0.0, py::arg("sample_fraction") = 0.1,
      py::arg("security_margin") = kDefaultSecurityMargin, py::arg("max_qber") = 0.11,
      py::arg("sift_only") = false, py::arg("sequences") = false);

  m.def(
      "run_network",
      [](const std::string& protocol, std::size_t cells, const ChannelParams& access,
         const ChannelParams& trunk, std::uint64_t pulses, std::uint64_t seed, std::size_t n_qbs,
         bool sift_only) {
        DistillOptions d;
        d.sift_only = sift_only;
        Rng rng(seed);
        const Topology topo = linear_topology(std::max<std::size_t>(cells, 1), access, trunk);
        const std::string last = cells <= 1 ? "qnc1b" : "qnc" + std::to_string(cells) + "a";
        py::gil_scoped_release release;
        SessionResult r;
        if (protocol == "protocol_a") {
          r = protocol_a(topo, "qnc1a", "qnc1b", pulses, d, rng);
        } else if (protocol == "protocol_a_chain") {
          r = protocol_a_chain(topo, "qnc1a", last, n_qbs, pulses, d, rng);
        } else if (protocol == "protocol_b") {
          r = protocol_b(topo, "qnc1a", last, pulses, d, rng);
        } else {
          py::gil_scoped_acquire acquire;
          throw py::value_error("protocol must be protocol_a, protocol_a_chain or protocol_b");
        }
        py::gil_scoped_acquire acquire;
        return session_json(r, false);
      },
      py::arg("protocol"), py::arg("cells"), py::arg("access"), py::arg("trunk"), py::arg("pulses"),
      py::arg("seed"), py::kw_only(), py::arg("n_qbs") = 1, py::arg("sift_only") = false);

  m.def(
      "run_config",
      [](const std::string& text, const std::string& base_dir) {
        const ExperimentConfig cfg = parse_config(text, "<config>", base_dir);
        py::gil_scoped_release release;
        return run_experiment(cfg).artifact;
      },
      py::arg("text"), py::arg("base_dir") = "");
  m.def(
      "normalize_config",
      [](const std::string& text) { return serialize_config(parse_config(text)); }, py::arg("text"));
  m.def(
      "trial_report",
      [](std::uint64_t seed, std::uint64_t pulses, const std::string& format) {
        const auto f = parse_format(format);
        if (!f) throw py::value_error("format must be csv or json");
        return trial_report(seed, pulses, *f);
      },
      py::arg("seed") = 1, py::arg("pulses") = 100'000'000, py::arg("format") = "json");
}
