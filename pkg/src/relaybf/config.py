"""Flat ``section.key = value`` experiment files.

Example::

    # alpha sweep with both grouping algorithms
    network.num_relays = 2
    network.num_ues = 2
    network.n_bs = 4
    network.n_rn = 4
    network.n_ue = 2
    network.cell_radius = 0.75 km
    network.bs_rn_ratio = 0.5
    network.num_subcarriers = 6
    radio.bandwidth = 180 kHz
    radio.n0 = -174 dBm/Hz
    radio.snr_gap = 0 dB
    radio.p_max_bs = 20 dBm
    radio.p_max_rn = 10 dBm
    grouping.alpha = 0.1
    sweep.alpha = 0.1, 0.2, 0.3
    sim.num_samples = 200
    sim.seed = 7

Physical quantities must carry a unit. Lists are comma separated and every
item carries its own unit. Unknown or repeated keys are errors.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

from .channel import PathLossModel, RadioParams
from .sim import ALGORITHMS, POLICIES, ExperimentConfig
from .topology import NetworkConfig


class ConfigError(ValueError):
    """Malformed experiment file; ``line`` is 1-based or ``None``."""

    def __init__(self, message: str, line=None, key=None):
        self.line = line
        self.key = key
        prefix = f"line {line}: " if line is not None else ""
        where = f"{key}: " if key is not None else ""
        super().__init__(f"{prefix}{where}{message}")


_UNITS = {
    "length": {"m": 1.0, "km": 1000.0},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6},
    "dB": {"dB": None},
    "dBm": {"dBm": None},
    "dBm/Hz": {"dBm/Hz": None},
}


def _number(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"not a number: {text!r}") from None
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError(f"not a finite number: {text!r}")
    return value


def _quantity(kind: str) -> Callable[[str], float]:
    units = _UNITS[kind]

    def parse(text: str) -> float:
        m = re.fullmatch(r"\s*(\S+)\s+(\S+)\s*", text)
        if not m:
            raise ValueError(f"expected a number followed by a unit ({', '.join(units)})")
        number, unit = m.groups()
        if unit not in units:
            raise ValueError(f"bad unit {unit!r}, expected one of {', '.join(units)}")
        value = _number(number)
        factor = units[unit]
        return value if factor is None else value * factor

    return parse


def _integer(text: str) -> int:
    text = text.strip()
    if not re.fullmatch(r"[+-]?\d+", text):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(text)


def _plain(text: str) -> float:
    return _number(text.strip())


def _word(choices) -> Callable[[str], str]:
    def parse(text: str) -> str:
        text = text.strip()
        if text not in choices:
            raise ValueError(f"expected one of {', '.join(choices)}, got {text!r}")
        return text

    return parse


def _list_of(item: Callable) -> Callable[[str], tuple]:
    def parse(text: str) -> tuple:
        parts = [p for p in text.split(",")]
        if not text.strip() or any(not p.strip() for p in parts):
            raise ValueError("expected a nonempty comma-separated list")
        return tuple(item(p) for p in parts)

    return parse


@dataclass(frozen=True)
class _Key:
    parse: Callable
    required: bool
    check: Callable = lambda v: None


def _positive(v):
    if not v > 0:
        raise ValueError("must be positive")


def _at_least(n):
    def check(v):
        if v < n:
            raise ValueError(f"must be >= {n}")

    return check


def _unit_interval(v):
    values = v if isinstance(v, tuple) else (v,)
    if any(not 0.0 <= x <= 1.0 for x in values):
        raise ValueError("must lie in [0, 1]")


def _open_unit(v):
    if not 0.0 < v < 1.0:
        raise ValueError("must lie in (0, 1)")


def _unique(v):
    if len(set(v)) != len(v):
        raise ValueError("entries must not repeat")


KEYS = {
    "network.num_relays": _Key(_integer, True, _at_least(0)),
    "network.num_ues": _Key(_integer, True, _at_least(1)),
    "network.n_bs": _Key(_integer, True, _at_least(1)),
    "network.n_rn": _Key(_integer, True, _at_least(1)),
    "network.n_ue": _Key(_integer, True, _at_least(1)),
    "network.cell_radius": _Key(_quantity("length"), True, _positive),
    "network.bs_rn_ratio": _Key(_plain, True, _open_unit),
    "network.num_subcarriers": _Key(_integer, True, _at_least(1)),
    "radio.bandwidth": _Key(_quantity("frequency"), True, _positive),
    "radio.n0": _Key(_quantity("dBm/Hz"), True),
    "radio.snr_gap": _Key(_quantity("dB"), True),
    "radio.p_max_bs": _Key(_quantity("dBm"), True),
    "radio.p_max_rn": _Key(_quantity("dBm"), True),
    "pathloss.los_intercept": _Key(_quantity("dB"), False),
    "pathloss.los_slope": _Key(_quantity("dB"), False, _positive),
    "pathloss.nlos_intercept": _Key(_quantity("dB"), False),
    "pathloss.nlos_slope": _Key(_quantity("dB"), False, _positive),
    "pathloss.min_distance": _Key(_quantity("length"), False, _positive),
    "grouping.alpha": _Key(_plain, True, _unit_interval),
    "grouping.max_inactive": _Key(_integer, False, _at_least(0)),
    "grouping.esga_limit": _Key(_integer, False, _at_least(1)),
    "sweep.alpha": _Key(_list_of(_plain), False, _unit_interval),
    "sweep.p_bs": _Key(_list_of(_quantity("dBm")), False),
    "sweep.p_rn": _Key(_list_of(_quantity("dBm")), False),
    "sim.num_samples": _Key(_integer, True, _at_least(1)),
    "sim.seed": _Key(_integer, True, _at_least(0)),
    "sim.algorithms": _Key(_list_of(_word(ALGORITHMS)), False, _unique),
    "sim.selection": _Key(_word(POLICIES), False),
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse an experiment file; raises :class:`ConfigError` on any problem."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'section.key = value'", lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in KEYS:
            raise ConfigError("unknown key", lineno, key)
        if key in values:
            raise ConfigError("key given twice", lineno, key)
        entry = KEYS[key]
        try:
            parsed = entry.parse(value)
            entry.check(parsed)
        except ValueError as exc:
            raise ConfigError(str(exc), lineno, key) from None
        values[key] = parsed
    for key, entry in KEYS.items():
        if entry.required and key not in values:
            raise ConfigError("missing required key", None, key)
    return _build(values)


def _build(v: dict) -> ExperimentConfig:
    network = NetworkConfig(
        num_relays=v["network.num_relays"],
        num_ues=v["network.num_ues"],
        n_bs=v["network.n_bs"],
        n_rn=v["network.n_rn"],
        n_ue=v["network.n_ue"],
        cell_radius=v["network.cell_radius"],
        bs_rn_distance_ratio=v["network.bs_rn_ratio"],
        num_subcarriers=v["network.num_subcarriers"],
    )
    radio = RadioParams(
        v["radio.bandwidth"], v["radio.n0"], v["radio.snr_gap"], v["radio.p_max_bs"], v["radio.p_max_rn"]
    )
    base = PathLossModel()
    pathloss = PathLossModel(
        v.get("pathloss.los_intercept", base.los_intercept),
        v.get("pathloss.los_slope", base.los_slope),
        v.get("pathloss.nlos_intercept", base.nlos_intercept),
        v.get("pathloss.nlos_slope", base.nlos_slope),
        v.get("pathloss.min_distance", base.min_distance),
    )
    defaults = ExperimentConfig.__dataclass_fields__
    try:
        return ExperimentConfig(
            network=network,
            radio=radio,
            alpha=v["grouping.alpha"],
            num_samples=v["sim.num_samples"],
            seed=v["sim.seed"],
            pathloss=pathloss,
            alpha_sweep=v.get("sweep.alpha", ()),
            p_bs_sweep=v.get("sweep.p_bs", ()),
            p_rn_sweep=v.get("sweep.p_rn", ()),
            algorithms=v.get("sim.algorithms", defaults["algorithms"].default),
            selection=v.get("sim.selection", defaults["selection"].default),
            max_inactive=v.get("grouping.max_inactive", defaults["max_inactive"].default),
            esga_limit=v.get("grouping.esga_limit", defaults["esga_limit"].default),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def serialize_config(config: ExperimentConfig) -> str:
    """Text form of ``config``; ``parse_config`` of the result gives an equal config."""
    n, r, p = config.network, config.radio, config.pathloss
    f = repr

    def dbm_list(xs):
        return ", ".join(f"{f(float(x))} dBm" for x in xs)

    lines = [
        f"network.num_relays = {n.num_relays}",
        f"network.num_ues = {n.num_ues}",
        f"network.n_bs = {n.n_bs}",
        f"network.n_rn = {n.n_rn}",
        f"network.n_ue = {n.n_ue}",
        f"network.cell_radius = {f(float(n.cell_radius))} m",
        f"network.bs_rn_ratio = {f(float(n.bs_rn_distance_ratio))}",
        f"network.num_subcarriers = {n.num_subcarriers}",
        f"radio.bandwidth = {f(float(r.bandwidth_hz))} Hz",
        f"radio.n0 = {f(float(r.noise_psd_dbm_hz))} dBm/Hz",
        f"radio.snr_gap = {f(float(r.snr_gap_db))} dB",
        f"radio.p_max_bs = {f(float(r.p_max_bs_dbm))} dBm",
        f"radio.p_max_rn = {f(float(r.p_max_rn_dbm))} dBm",
        f"pathloss.los_intercept = {f(float(p.los_intercept))} dB",
        f"pathloss.los_slope = {f(float(p.los_slope))} dB",
        f"pathloss.nlos_intercept = {f(float(p.nlos_intercept))} dB",
        f"pathloss.nlos_slope = {f(float(p.nlos_slope))} dB",
        f"pathloss.min_distance = {f(float(p.min_distance))} m",
        f"grouping.alpha = {f(float(config.alpha))}",
        f"grouping.max_inactive = {config.max_inactive}",
        f"grouping.esga_limit = {config.esga_limit}",
    ]
    if config.alpha_sweep:
        lines.append("sweep.alpha = " + ", ".join(f(float(a)) for a in config.alpha_sweep))
    if config.p_bs_sweep:
        lines.append(f"sweep.p_bs = {dbm_list(config.p_bs_sweep)}")
    if config.p_rn_sweep:
        lines.append(f"sweep.p_rn = {dbm_list(config.p_rn_sweep)}")
    lines += [
        f"sim.num_samples = {config.num_samples}",
        f"sim.seed = {config.seed}",
        f"sim.algorithms = {', '.join(config.algorithms)}",
        f"sim.selection = {config.selection}",
    ]
    return "\n".join(lines) + "\n"
