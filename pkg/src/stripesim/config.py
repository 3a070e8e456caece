"""Simulation parameters: container, validation, and INI-file round trip.

All power quantities are stored internally in watts. The config file
additionally accepts the conventional units (mW for UE power, dBm for noise
power, degrees for the angular spread); values are converted on load.
"""

from __future__ import annotations

import configparser
import enum
import io
import math
from dataclasses import dataclass, replace

import numpy as np


class CorrelationModel(enum.Enum):
    """Spatial correlation model applied to every AP-UE channel."""

    GAUSSIAN_LOCAL_SCATTERING = "gaussian_local_scattering"
    UNCORRELATED = "uncorrelated"

    @classmethod
    def from_string(cls, text: str) -> "CorrelationModel":
        key = text.strip().lower().replace("_", "").replace("-", "")
        for member in cls:
            if member.value.replace("_", "") == key:
                return member
        valid = ", ".join(m.value for m in cls)
        raise ValueError(f"unknown correlation model {text!r} (valid: {valid})")


@dataclass
class SimulationConfig:
    # Network size
    num_aps: int = 24                  # L, APs daisy-chained along the stripe
    antennas_per_ap: int = 4           # N
    num_ues: int = 10                  # K, single-antenna terminals

    # Radio frame and powers
    coherence_block: int = 200         # tau_c, channel uses per block
    pilot_length: int = 20             # tau_p, channel uses spent on pilots
    ue_power_w: float | tuple[float, ...] = 0.05   # per-UE transmit power (50 mW); tuple = per-UE values
    noise_power_w: float = 10.0 ** (-12.2)         # -92 dBm
    carrier_freq_hz: float = 2.0e9     # informational only
    bandwidth_hz: float = 20.0e6       # informational only

    # Geometry: stripe wrapped around a square perimeter, UEs inside
    stripe_length_m: float = 500.0
    ap_ue_height_gap_m: float = 5.0

    # Channel model
    correlation_model: CorrelationModel = CorrelationModel.GAUSSIAN_LOCAL_SCATTERING
    angular_std_dev_rad: float = math.radians(15.0)

    # Monte Carlo
    num_setups: int = 50
    num_channel_realizations: int = 200
    rng_seed: int = 1
    num_workers: int = 0               # 0 = all available cores

    @property
    def square_side_m(self) -> float:
        """Side of the served square; the stripe covers its full perimeter."""
        return self.stripe_length_m / 4.0

    @property
    def ue_powers(self) -> np.ndarray:
        """Transmit powers as a length-K vector in watts."""
        if isinstance(self.ue_power_w, (int, float)):
            return np.full(self.num_ues, float(self.ue_power_w))
        return np.asarray(self.ue_power_w, dtype=float)

    def validate(self) -> None:
        if self.num_aps < 2:
            raise ValueError("num_aps must be >= 2")
        if self.antennas_per_ap < 1:
            raise ValueError("antennas_per_ap must be >= 1")
        if self.num_ues < 1:
            raise ValueError("num_ues must be >= 1")
        if self.pilot_length < 1:
            raise ValueError("pilot_length must be >= 1")
        if self.pilot_length > self.coherence_block:
            raise ValueError("pilot_length must not exceed coherence_block")
        powers = self.ue_powers
        if powers.shape != (self.num_ues,):
            raise ValueError(
                f"ue_power_w must be scalar or length {self.num_ues}, got {powers.shape}"
            )
        if not np.all(powers > 0.0):
            raise ValueError("all UE powers must be strictly positive")
        if not self.noise_power_w > 0.0:
            raise ValueError("noise_power_w must be strictly positive")
        if not self.stripe_length_m > 0.0:
            raise ValueError("stripe_length_m must be strictly positive")
        if not self.ap_ue_height_gap_m > 0.0:
            raise ValueError("ap_ue_height_gap_m must be strictly positive")
        if not self.angular_std_dev_rad > 0.0:
            raise ValueError("angular_std_dev_rad must be strictly positive")
        if self.num_setups < 1 or self.num_channel_realizations < 1:
            raise ValueError("Monte Carlo counts must be >= 1")
        if self.rng_seed < 0 or self.rng_seed >= 2 ** 64:
            raise ValueError("rng_seed must fit in an unsigned 64-bit integer")
        if self.num_workers < 0:
            raise ValueError("num_workers must be >= 0 (0 = all cores)")


# (section, canonical key) -> field name. Canonical keys are what to_ini()
# emits; they round-trip exactly via Python float repr.
_LAYOUT = {
    ("network", "num_aps"): "num_aps",
    ("network", "antennas_per_ap"): "antennas_per_ap",
    ("network", "num_ues"): "num_ues",
    ("radio", "coherence_block"): "coherence_block",
    ("radio", "pilot_length"): "pilot_length",
    ("radio", "ue_power_w"): "ue_power_w",
    ("radio", "noise_power_w"): "noise_power_w",
    ("radio", "carrier_freq_hz"): "carrier_freq_hz",
    ("radio", "bandwidth_hz"): "bandwidth_hz",
    ("geometry", "stripe_length_m"): "stripe_length_m",
    ("geometry", "ap_ue_height_gap_m"): "ap_ue_height_gap_m",
    ("channel_model", "correlation_model"): "correlation_model",
    ("channel_model", "angular_std_dev_rad"): "angular_std_dev_rad",
    ("montecarlo", "num_setups"): "num_setups",
    ("montecarlo", "num_channel_realizations"): "num_channel_realizations",
    ("montecarlo", "rng_seed"): "rng_seed",
    ("montecarlo", "num_workers"): "num_workers",
}

# Convenience keys in conventional units; mapped onto the canonical field.
_ALIASES = {
    ("radio", "ue_power_mw"): ("ue_power_w", lambda v: _parse_power_list(v, 1e-3)),
    ("radio", "noise_power_dbm"): ("noise_power_w", lambda v: 10.0 ** ((float(v) - 30.0) / 10.0)),
    ("channel_model", "angular_std_dev_deg"): ("angular_std_dev_rad", lambda v: math.radians(float(v))),
}

_INT_FIELDS = {
    "num_aps", "antennas_per_ap", "num_ues", "coherence_block", "pilot_length",
    "num_setups", "num_channel_realizations", "rng_seed", "num_workers",
}


def _parse_power_list(text: str, scale: float = 1.0) -> float | tuple[float, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    values = tuple(float(p) * scale for p in parts)
    return values[0] if len(values) == 1 else values


def _parse_field(name: str, raw: str):
    if name in _INT_FIELDS:
        return int(raw)
    if name == "correlation_model":
        return CorrelationModel.from_string(raw)
    if name == "ue_power_w":
        return _parse_power_list(raw)
    return float(raw)


def _format_field(value) -> str:
    if isinstance(value, CorrelationModel):
        return value.value
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_from_ini(text: str) -> SimulationConfig:
    """Parse a config from INI text; unknown keys are rejected."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ValueError(f"malformed config file: {exc}") from exc

    values: dict[str, object] = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            loc = (section, key)
            if loc in _LAYOUT:
                name = _LAYOUT[loc]
                parsed = _parse_field(name, raw)
            elif loc in _ALIASES:
                name, converter = _ALIASES[loc]
                parsed = converter(raw)
            else:
                raise ValueError(f"unknown config key [{section}] {key}")
            if name in values:
                raise ValueError(f"config key [{section}] {key} sets {name} twice")
            values[name] = parsed

    config = replace(SimulationConfig(), **values)
    config.validate()
    return config


def load_config(path) -> SimulationConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_ini(fh.read())


def config_to_ini(config: SimulationConfig) -> str:
    """Render the resolved config; parsing the result reproduces it exactly."""
    parser = configparser.ConfigParser()
    for (section, key), name in _LAYOUT.items():
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, _format_field(getattr(config, name)))
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def save_config(config: SimulationConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config_to_ini(config))
