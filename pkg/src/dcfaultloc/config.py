"""Flat ``key = value`` scenario files with unit-suffixed quantities.

Example::

    # point-to-point link, pole-to-pole fault halfway
    configuration = point_to_point
    cable.l = 0.35mH/km
    terminal.clr = 10uH
    fault.kind = PTP
    fault.distance = 50%        # of the faulted section
    fault.resistance = 1mohm

``terminal.*`` sets every terminal; ``terminalN.*`` overrides bus N. Sweep
files add ``sweep.*`` keys whose values are comma-separated lists.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from .locator import LocatorConfig
from .measurement import NoiseSpec
from .scenarios import (DEFAULT_BRANCH_LENGTHS, FAULT_KINDS, MULTI_TERMINAL, POINT_TO_POINT, CableSection,
                        FaultSpec, NetworkTopology, TerminalSpec)


class ConfigError(ValueError):
    def __init__(self, message, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.key = key


_PREFIX = {"p": 1e-12, "n": 1e-9, "u": 1e-6, "µ": 1e-6, "m": 1e-3, "": 1.0, "k": 1e3, "M": 1e6, "G": 1e9}
_ALIASES = {"Ω": "ohm", "Ohm": "ohm", "ohms": "ohm", "sec": "s"}
_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf)\s*(.*?)\s*$")

# key -> expected unit ("" = dimensionless, "int", "str", "km" lengths, "%" allowed where noted)
_SCALAR_KEYS = {
    "configuration": "str",
    "cable.r": "ohm/km",
    "cable.l": "H/km",
    "cable.length": "km",
    "branches.lengths": "km[]",
    "fault.kind": "str",
    "fault.distance": "km|%",
    "fault.resistance": "ohm",
    "fault.inception": "s",
    "sim.step": "s",
    "sim.pre_fault": "s",
    "sim.post_fault": "s",
    "measure.sample_rate": "Hz",
    "noise.snr_db": "dB",
    "noise.seed": "int",
    "locator.window": "int",
    "locator.trigger_threshold": "V",
    "locator.plateau_tolerance": "",
    "locator.plateau_min_duration": "s",
    "locator.analysis_span": "s",
}
_TERMINAL_FIELDS = {"capacitance": ("bus_capacitance", "F"), "clr": ("clr_inductance", "H"),
                    "rg": ("grounding_resistance", "ohm"), "voltage": ("initial_voltage", "V")}
_SWEEP_KEYS = {
    "sweep.distances": "km|%",
    "sweep.resistances": "ohm",
    "sweep.windows": "int",
    "sweep.sample_rates": "Hz",
    "sweep.snr_db": "dB",
    "sweep.seeds": "int",
    "sweep.kinds": "str",
}
_TERMINAL_KEY = re.compile(r"^terminal([1-6]?)\.(\w+)$")


def _split_unit(unit):
    unit = unit.strip()
    for alias, canon in _ALIASES.items():
        unit = unit.replace(alias, canon)
    return unit


def parse_quantity(text: str, unit: str) -> float:
    """Parse ``"0.35mH/km"`` against expected ``unit`` ("H/km") and return SI.

    Lengths are returned in km. A bare number is taken in the expected unit.
    """
    m = _NUMBER.match(text)
    if not m:
        raise ConfigError(f"cannot read a number from {text!r}")
    value = float(m.group(1))
    given = _split_unit(m.group(2))
    if unit == "":
        if given:
            raise ConfigError(f"expected a plain number, got unit {given!r}")
        return value
    if unit == "dB":
        if given not in ("", "dB"):
            raise ConfigError(f"expected dB, got {given!r}")
        return value
    if not given:
        return value
    num, _, den = given.partition("/")
    exp_num, _, exp_den = unit.partition("/")
    if exp_num == "km":
        exp_num = "m"
        value_scale = 1e-3
    else:
        value_scale = 1.0
    if not num.endswith(exp_num):
        raise ConfigError(f"expected unit {unit}, got {given!r}")
    prefix = num[: len(num) - len(exp_num)]
    if prefix not in _PREFIX:
        raise ConfigError(f"unknown SI prefix {prefix!r} in {given!r}")
    value *= _PREFIX[prefix] * value_scale
    if exp_den:
        if den == "km":
            pass
        elif den == "m":
            value *= 1e3
        else:
            raise ConfigError(f"expected unit {unit}, got {given!r}")
    elif den:
        raise ConfigError(f"expected unit {unit}, got {given!r}")
    return value


def _parse_value(raw, unit):
    if unit == "str":
        return raw.strip()
    if unit == "int":
        try:
            return int(raw.strip())
        except ValueError:
            raise ConfigError(f"expected an integer, got {raw!r}") from None
    if unit == "km|%":
        raw = raw.strip()
        if raw.endswith("%"):
            return ("%", float(raw[:-1]))
        return parse_quantity(raw, "km")
    return parse_quantity(raw, unit)


def read_pairs(text: str) -> List[Tuple[int, str, str]]:
    pairs = []
    seen = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError("expected 'key = value'", lineno)
        key = key.strip()
        if key in seen:
            raise ConfigError(f"duplicate key (first on line {seen[key]})", lineno, key)
        seen[key] = lineno
        pairs.append((lineno, key, value.strip()))
    return pairs


@dataclass
class ScenarioConfig:
    topology: NetworkTopology = field(default_factory=NetworkTopology)
    fault: FaultSpec = field(default_factory=FaultSpec)
    internal_step: float = 1e-8
    pre_fault: float = 20e-6
    post_fault: float = 200e-6
    sample_rate: float = 10e6
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    locator: LocatorConfig = field(default_factory=LocatorConfig)

    def fingerprint(self):
        return self.topology.fingerprint(self.fault, self.internal_step, self.pre_fault, self.post_fault,
                                         self.sample_rate, self.noise, self.locator)


@dataclass
class SweepSpec:
    base: ScenarioConfig
    distances: list = field(default_factory=list)
    resistances: list = field(default_factory=list)
    windows: list = field(default_factory=list)
    sample_rates: list = field(default_factory=list)
    snr_db: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    kinds: list = field(default_factory=list)

    def __post_init__(self):
        for name in ("distances", "resistances", "windows", "sample_rates", "snr_db", "seeds", "kinds"):
            if not getattr(self, name):
                raise ConfigError(f"sweep list {name!r} is empty", key=f"sweep.{name}")

    @property
    def size(self):
        return (len(self.distances) * len(self.resistances) * len(self.windows) * len(self.sample_rates)
                * len(self.snr_db) * len(self.seeds) * len(self.kinds))


def _resolve_distance(value, D1):
    if isinstance(value, tuple):
        return value[1] / 100.0 * D1
    return value


def parse_scenario(text: str, allow_sweep=False):
    """Build a :class:`ScenarioConfig` (and the raw sweep lists) from text."""
    values: Dict[str, object] = {}
    terminal_all: Dict[str, float] = {}
    terminal_one: Dict[int, Dict[str, float]] = {}
    sweep: Dict[str, list] = {}
    for lineno, key, raw in read_pairs(text):
        try:
            if key in _SCALAR_KEYS:
                unit = _SCALAR_KEYS[key]
                if unit == "km[]":
                    values[key] = tuple(parse_quantity(p, "km") for p in raw.split(","))
                else:
                    values[key] = _parse_value(raw, unit)
            elif key in _SWEEP_KEYS and allow_sweep:
                sweep[key[len("sweep."):]] = [_parse_value(p, _SWEEP_KEYS[key]) for p in raw.split(",") if p.strip()]
            elif key in _SWEEP_KEYS:
                raise ConfigError("sweep lists are only read by the sweep command", lineno, key)
            elif _TERMINAL_KEY.match(key):
                bus, name = _TERMINAL_KEY.match(key).groups()
                if name not in _TERMINAL_FIELDS:
                    raise ConfigError("unknown terminal field", lineno, key)
                attr, unit = _TERMINAL_FIELDS[name]
                target = terminal_all if bus == "" else terminal_one.setdefault(int(bus), {})
                target[attr] = parse_quantity(raw, unit)
            else:
                raise ConfigError("unknown key", lineno, key)
        except ConfigError as exc:
            if exc.line is None:
                raise ConfigError(str(exc), lineno, key) from None
            raise

    try:
        cfg = _assemble(values, terminal_all, terminal_one)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if allow_sweep:
        return cfg, sweep
    return cfg


def _assemble(values, terminal_all, terminal_one):
    configuration = values.get("configuration", POINT_TO_POINT)
    if configuration not in (POINT_TO_POINT, MULTI_TERMINAL):
        raise ConfigError(f"unknown configuration {configuration!r}", key="configuration")
    cable = CableSection(values.get("cable.r", CableSection.r_per_km), values.get("cable.l", CableSection.l_per_km),
                         values.get("cable.length", CableSection.length_km))
    n_terms = 6 if configuration == MULTI_TERMINAL else 2
    for bus in terminal_one:
        if bus > n_terms:
            raise ConfigError(f"terminal{bus} does not exist in a {configuration} topology")
    terms = [TerminalSpec(**{**terminal_all, **terminal_one.get(k, {})}) for k in range(1, n_terms + 1)]
    if configuration == MULTI_TERMINAL:
        lengths = values.get("branches.lengths", DEFAULT_BRANCH_LENGTHS)
        topology = NetworkTopology(MULTI_TERMINAL, cable, terms[0], terms[1], tuple(lengths), tuple(terms[2:]))
    else:
        if "branches.lengths" in values:
            raise ConfigError("branches.lengths only applies to multi_terminal", key="branches.lengths")
        topology = NetworkTopology(POINT_TO_POINT, cable, terms[0], terms[1])
    kind = values.get("fault.kind", "PTP")
    if kind not in FAULT_KINDS:
        raise ConfigError(f"unknown fault kind {kind!r}", key="fault.kind")
    fault = FaultSpec(kind, _resolve_distance(values.get("fault.distance", ("%", 50.0)), topology.D1),
                      values.get("fault.resistance", 1e-3), values.get("fault.inception", 1.0))
    snr = values.get("noise.snr_db", math.inf)
    locator = LocatorConfig(values.get("locator.window", 3), values.get("locator.trigger_threshold"),
                            values.get("locator.plateau_tolerance", 0.01),
                            values.get("locator.plateau_min_duration", 1e-6),
                            values.get("locator.analysis_span", 200e-6))
    return ScenarioConfig(topology, fault, values.get("sim.step", 1e-8), values.get("sim.pre_fault", 20e-6),
                          values.get("sim.post_fault", 200e-6), values.get("measure.sample_rate", 10e6),
                          NoiseSpec(snr, values.get("noise.seed", 0)), locator)


def load_scenario(path) -> ScenarioConfig:
    with open(path) as fh:
        return parse_scenario(fh.read())


def parse_sweep(text: str) -> SweepSpec:
    base, lists = parse_scenario(text, allow_sweep=True)
    D1 = base.topology.D1
    return SweepSpec(
        base,
        distances=[_resolve_distance(v, D1) for v in lists.get("distances", [base.fault.distance_km])],
        resistances=lists.get("resistances", [base.fault.resistance]),
        windows=lists.get("windows", [base.locator.window_samples]),
        sample_rates=lists.get("sample_rates", [base.sample_rate]),
        snr_db=lists.get("snr_db", [base.noise.snr_db]),
        seeds=lists.get("seeds", [base.noise.seed]),
        kinds=lists.get("kinds", [base.fault.kind]),
    )


def load_sweep(path) -> SweepSpec:
    with open(path) as fh:
        return parse_sweep(fh.read())
