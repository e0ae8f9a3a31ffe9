"""QKD link and cellular network simulator (C++ core)."""

import json as _json

from ._qkdnet import (
    ChannelParams,
    ConfigError,
    QkdError,
    RoutingError,
    binary_entropy,
    classify_bases,
    click_probability,
    derive_seed,
    expected_qber,
    final_key_length,
    normalize_config,
    raw_key_rate,
    simulate_tally,
    transmittance,
)
from . import _qkdnet

__all__ = [
    "ChannelParams",
    "ConfigError",
    "QkdError",
    "RoutingError",
    "binary_entropy",
    "classify_bases",
    "click_probability",
    "derive_seed",
    "expected_qber",
    "final_key_length",
    "normalize_config",
    "raw_key_rate",
    "simulate_tally",
    "transmittance",
    "run_bb84",
    "run_network",
    "run_config",
    "trial_report",
]


def run_bb84(channel, pulses, seed, **options):
    """One BB84 session; returns the transcript dict plus both final keys."""
    return _json.loads(_qkdnet.run_bb84(channel, pulses, seed, **options))


def run_network(protocol, cells, access, trunk, pulses, seed, **options):
    """Protocol A, chained Protocol A or the XOR relay on a linear chain of cells."""
    return _json.loads(_qkdnet.run_network(protocol, cells, access, trunk, pulses, seed, **options))


def run_config(text, base_dir=""):
    """Run a YAML experiment config; returns the artifact text (CSV or JSON)."""
    return _qkdnet.run_config(text, base_dir)


def trial_report(seed=1, pulses=100_000_000, format="json"):
    text = _qkdnet.trial_report(seed, pulses, format)
    return _json.loads(text) if format == "json" else text
