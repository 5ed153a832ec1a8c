"""Single-terminal fault location for low-voltage DC lines.

A linear transient circuit engine produces terminal waveforms for pole-to-pole
and pole-to-ground faults; the locator recovers the fault distance from the
local CLR voltage, current and bus voltage alone.
"""
from .engine import Circuit, RawTrace, TransientSystem, simulate
from .estimator import gamma_at_inception, multiterminal_gain, ptg_gain, ptp_gain, rotv
from .locator import LocatorConfig, LocatorResult, NoPlateauError, NoTriggerError, locate
from .measurement import NoiseSpec, Waveform, add_wgn, sample
from .scenarios import (MULTI_TERMINAL, N_PTG, P_PTG, POINT_TO_POINT, PTP, FaultSpec, NetworkTopology,
                        paper_default_topology, simulate_fault)

__version__ = "0.1.0"

__all__ = [
    "Circuit", "RawTrace", "TransientSystem", "simulate",
    "gamma_at_inception", "multiterminal_gain", "ptg_gain", "ptp_gain", "rotv",
    "LocatorConfig", "LocatorResult", "NoPlateauError", "NoTriggerError", "locate",
    "NoiseSpec", "Waveform", "add_wgn", "sample",
    "MULTI_TERMINAL", "N_PTG", "P_PTG", "POINT_TO_POINT", "PTP", "FaultSpec", "NetworkTopology",
    "paper_default_topology", "simulate_fault",
]
