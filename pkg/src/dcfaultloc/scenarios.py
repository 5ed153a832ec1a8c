"""Simplified fault networks of a bipolar LVDC link and a six-bus star network.

Pole-to-pole faults are modelled as a single loop whose series elements are
doubled (pole and return conductor), so ``v1``/``v_dc1`` are pole-to-pole
voltages. Pole-to-ground faults use one pole: the faulted half of a
mid-point-grounded DC link, one CLR per terminal and the earth return through
the grounding resistors.

Probe names shared by all builders:

``v1``      bus voltage behind the local CLR
``v_dc1``   cable-side voltage at terminal 1
``i_dc1``   current fed by terminal 1 towards the fault
``v_dc2``, ``i_dc2`` ... the same at the remote terminals (validation only)
``i_f``     current through the fault resistance
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Tuple

from .engine import CAPACITOR, INDUCTOR, RESISTOR, SWITCH, Circuit, simulate

PTP, P_PTG, N_PTG = "PTP", "P_PTG", "N_PTG"
FAULT_KINDS = (PTP, P_PTG, N_PTG)
POINT_TO_POINT, MULTI_TERMINAL = "point_to_point", "multi_terminal"

# Chosen defaults; see README for the reasoning.
DEFAULT_R_PER_KM = 0.25
DEFAULT_L_PER_KM = 0.35e-3
DEFAULT_CLR = 10e-6
# grounding resistance with the same L/R ratio as the cable; under this
# condition the early inductive current split equals the resistive one
DEFAULT_RG = DEFAULT_CLR * DEFAULT_R_PER_KM / DEFAULT_L_PER_KM
DEFAULT_BUS_CAPACITANCE = 5e-3
DEFAULT_VOLTAGE = 760.0
DEFAULT_D1 = 2.0
DEFAULT_BRANCH_LENGTHS = (2.0, 1.5, 1.0, 1.0, 2.0, 0.5)  # D2..D7


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class CableSection:
    r_per_km: float = DEFAULT_R_PER_KM
    l_per_km: float = DEFAULT_L_PER_KM
    length_km: float = DEFAULT_D1

    def __post_init__(self):
        if min(self.r_per_km, self.l_per_km, self.length_km) <= 0:
            raise ScenarioError(f"cable constants must be positive: {self}")


@dataclass(frozen=True)
class TerminalSpec:
    bus_capacitance: float = DEFAULT_BUS_CAPACITANCE
    clr_inductance: float = DEFAULT_CLR
    grounding_resistance: float = DEFAULT_RG
    initial_voltage: float = DEFAULT_VOLTAGE

    def __post_init__(self):
        if self.bus_capacitance <= 0 or self.clr_inductance <= 0 or self.initial_voltage <= 0:
            raise ScenarioError(f"terminal values must be positive: {self}")
        if self.grounding_resistance < 0:
            raise ScenarioError("grounding resistance must be non-negative")


@dataclass(frozen=True)
class FaultSpec:
    kind: str = PTP
    distance_km: float = 1.0
    resistance: float = 1e-3
    inception_time: float = 1.0

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise ScenarioError(f"unknown fault kind {self.kind!r}")
        if self.resistance < 0 or self.inception_time < 0:
            raise ScenarioError("fault resistance and inception time must be non-negative")

    @property
    def pole_count(self):
        return 2 if self.kind == PTP else 1


@dataclass(frozen=True)
class NetworkTopology:
    configuration: str = POINT_TO_POINT
    faulted_section: CableSection = field(default_factory=CableSection)
    terminal_1: TerminalSpec = field(default_factory=TerminalSpec)
    terminal_2: TerminalSpec = field(default_factory=TerminalSpec)
    branch_lengths_km: Tuple[float, ...] = ()
    remote_terminals: Tuple[TerminalSpec, ...] = ()

    def __post_init__(self):
        if self.configuration == POINT_TO_POINT:
            if self.branch_lengths_km or self.remote_terminals:
                raise ScenarioError("point_to_point topology takes no branch lengths")
        elif self.configuration == MULTI_TERMINAL:
            if len(self.branch_lengths_km) != 6 or min(self.branch_lengths_km) <= 0:
                raise ScenarioError("multi_terminal topology needs six positive lengths D2..D7")
            if len(self.remote_terminals) != 4:
                raise ScenarioError("multi_terminal topology needs terminal specs for buses 3-6")
        else:
            raise ScenarioError(f"unknown configuration {self.configuration!r}")

    @property
    def D1(self):
        return self.faulted_section.length_km

    @property
    def lengths(self):
        """(D1, D2, ..., D7) for multi-terminal, (D1,) otherwise."""
        return (self.D1,) + tuple(self.branch_lengths_km)

    def terminals(self):
        return [self.terminal_1, self.terminal_2, *self.remote_terminals]

    def fingerprint(self, *extra) -> str:
        payload = json.dumps([asdict(self), [asdict(e) if hasattr(e, "__dataclass_fields__") else e for e in extra]],
                             sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def paper_default_topology(configuration: str = POINT_TO_POINT) -> NetworkTopology:
    """760 V pole-to-pole, 5 mF buses, D1 = 2 km; other values are chosen defaults."""
    if configuration == POINT_TO_POINT:
        return NetworkTopology()
    if configuration == MULTI_TERMINAL:
        return NetworkTopology(MULTI_TERMINAL, branch_lengths_km=DEFAULT_BRANCH_LENGTHS,
                               remote_terminals=(TerminalSpec(),) * 4)
    raise ScenarioError(f"unknown configuration {configuration!r}")


def _check_distance(topology, fault):
    if not 0.0 < fault.distance_km < topology.D1:
        raise ScenarioError(f"fault distance {fault.distance_km} km outside (0, {topology.D1})")


class _Builder:
    """Adds doubled (pole-to-pole) or single-pole elements to one circuit."""

    def __init__(self, cable: CableSection, scale: float):
        self.c = Circuit()
        self.cable = cable
        self.scale = scale

    def terminal(self, k, spec: TerminalSpec, sign=1.0, grounded=False):
        """Bus capacitor behind its CLR; returns the cable-side node."""
        bus, dc = f"b{k}", f"c{k}"
        if grounded:
            # faulted half of the mid-point grounded link; bus_capacitance is the
            # pole-to-pole equivalent so each half is twice that
            mid = f"mid{k}"
            self.c.add(f"C{k}", CAPACITOR, bus, mid, 2 * spec.bus_capacitance, sign * spec.initial_voltage / 2)
            self.c.add(f"Rg{k}", RESISTOR, mid, "gnd", spec.grounding_resistance)
        else:
            self.c.add(f"C{k}", CAPACITOR, bus, "gnd", spec.bus_capacitance, sign * spec.initial_voltage)
        self.c.add(f"Lclr{k}", INDUCTOR, bus, dc, self.scale * spec.clr_inductance)
        return bus, dc

    def cable_run(self, name, a, b, length):
        mid = f"{name}_m"
        self.c.add(f"{name}_r", RESISTOR, a, mid, self.scale * self.cable.r_per_km * length)
        self.c.add(f"{name}_l", INDUCTOR, mid, b, self.scale * self.cable.l_per_km * length)

    def fault(self, node, fault: FaultSpec):
        self.c.add("Sf", SWITCH, node, "f_sw", close_time=fault.inception_time)
        self.c.add("Rf", RESISTOR, "f_sw", "gnd", fault.resistance)


def _probe_terminal(c: Circuit, k, bus, dc):
    if k == 1:
        c.probe_voltage("v1", bus)
    c.probe_voltage(f"v_dc{k}", dc)
    c.probe_current(f"i_dc{k}", f"Lclr{k}")
    if k == 2:
        c.probe_voltage("v2", bus)


def build_ptp_circuit(topology: NetworkTopology, fault: FaultSpec) -> Circuit:
    if topology.configuration != POINT_TO_POINT or fault.kind != PTP:
        raise ScenarioError("build_ptp_circuit needs a point_to_point topology and a PTP fault")
    return _two_terminal(topology, fault, scale=2.0, grounded=False, sign=1.0)


def build_ptg_circuit(topology: NetworkTopology, fault: FaultSpec) -> Circuit:
    if topology.configuration != POINT_TO_POINT or fault.kind not in (P_PTG, N_PTG):
        raise ScenarioError("build_ptg_circuit needs a point_to_point topology and a P_PTG/N_PTG fault")
    sign = 1.0 if fault.kind == P_PTG else -1.0
    return _two_terminal(topology, fault, scale=1.0, grounded=True, sign=sign)


def _two_terminal(topology, fault, scale, grounded, sign):
    _check_distance(topology, fault)
    d, D1 = fault.distance_km, topology.D1
    b = _Builder(topology.faulted_section, scale)
    bus1, dc1 = b.terminal(1, topology.terminal_1, sign, grounded)
    bus2, dc2 = b.terminal(2, topology.terminal_2, sign, grounded)
    b.cable_run("cab1", dc1, "f", d)
    b.cable_run("cab2", dc2, "f", D1 - d)
    b.fault("f", fault)
    _probe_terminal(b.c, 1, bus1, dc1)
    _probe_terminal(b.c, 2, bus2, dc2)
    b.c.probe_current("i_f", "Rf") if fault.resistance > 0 else b.c.probe_current("i_f", "Sf")
    return b.c


def build_multiterminal_circuit(topology: NetworkTopology, fault: FaultSpec) -> Circuit:
    """Star network: D1 from bus 1 to the junction, D2/D3 to buses 2/3, D7 to
    a sub-junction feeding D4/D5/D6 to buses 4-6."""
    if topology.configuration != MULTI_TERMINAL:
        raise ScenarioError("build_multiterminal_circuit needs a multi_terminal topology")
    _check_distance(topology, fault)
    D1, D2, D3, D4, D5, D6, D7 = topology.lengths
    d = fault.distance_km
    grounded = fault.kind != PTP
    scale = 2.0 if fault.kind == PTP else 1.0
    sign = -1.0 if fault.kind == N_PTG else 1.0
    b = _Builder(topology.faulted_section, scale)
    ends = {}
    for k, spec in enumerate(topology.terminals(), start=1):
        ends[k] = b.terminal(k, spec, sign, grounded)
    b.cable_run("cab1", ends[1][1], "f", d)
    b.cable_run("cab1b", "f", "J", D1 - d)
    b.cable_run("cab2", ends[2][1], "J", D2)
    b.cable_run("cab3", ends[3][1], "J", D3)
    b.cable_run("cab7", "S", "J", D7)
    for k, length in zip((4, 5, 6), (D4, D5, D6)):
        b.cable_run(f"cab{k}", ends[k][1], "S", length)
    b.fault("f", fault)
    _probe_terminal(b.c, 1, *ends[1])
    for k in range(2, 7):
        _probe_terminal(b.c, k, *ends[k])
    b.c.probe_current("i_f", "Rf") if fault.resistance > 0 else b.c.probe_current("i_f", "Sf")
    return b.c


def build_circuit(topology: NetworkTopology, fault: FaultSpec) -> Circuit:
    if topology.configuration == MULTI_TERMINAL:
        return build_multiterminal_circuit(topology, fault)
    if fault.kind == PTP:
        return build_ptp_circuit(topology, fault)
    return build_ptg_circuit(topology, fault)


def simulate_fault(topology: NetworkTopology, fault: FaultSpec, post_fault=200e-6, pre_fault=20e-6,
                   internal_step=1e-8):
    """Simulate from ``pre_fault`` before inception to ``post_fault`` after it."""
    t0 = max(0.0, fault.inception_time - pre_fault)
    duration = fault.inception_time + post_fault - t0
    return simulate(build_circuit(topology, fault), duration, internal_step, t0=t0)
