"""Scenario-level helpers: simulate to a waveform, locate, compare estimates."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional

import numpy as np

from . import estimator
from .config import ScenarioConfig
from .locator import NoPlateauError, locate
from .measurement import NoiseSpec, Waveform, add_wgn, sample
from .scenarios import MULTI_TERMINAL, PTP, FaultSpec, NetworkTopology, simulate_fault


def simulate_waveform(topology: NetworkTopology, fault: FaultSpec, sample_rate=10e6, internal_step=1e-8,
                      post_fault=200e-6, pre_fault=20e-6, noise: Optional[NoiseSpec] = None,
                      fingerprint="") -> Waveform:
    trace = simulate_fault(topology, fault, post_fault=post_fault, pre_fault=pre_fault,
                           internal_step=internal_step)
    w = sample(trace, sample_rate, fault_time=fault.inception_time,
               fingerprint=fingerprint or topology.fingerprint(fault))
    if noise is not None:
        w = add_wgn(w, noise)
    return w


def waveform_for(cfg: ScenarioConfig, noisy=True) -> Waveform:
    return simulate_waveform(cfg.topology, cfg.fault, cfg.sample_rate, cfg.internal_step, cfg.post_fault,
                             cfg.pre_fault, cfg.noise if noisy else None, cfg.fingerprint())


@dataclass
class RunReport:
    fingerprint: str
    true_distance: float
    estimate: Optional[float]
    absolute_error_km: Optional[float]
    percent_error: Optional[float]
    plateau_duration: Optional[float]
    plateau_start: Optional[float] = None
    plateau_end: Optional[float] = None
    status: str = "ok"
    message: str = ""
    timing: Dict[str, float] = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def run_case(cfg: ScenarioConfig, derivative="clr") -> RunReport:
    """Simulate, sample, add noise and locate one scenario."""
    fp = cfg.fingerprint()
    d = cfg.fault.distance_km
    timing = {}
    t = time.perf_counter()
    w = waveform_for(cfg)
    timing["simulate"] = time.perf_counter() - t
    t = time.perf_counter()
    try:
        res = locate(w, cfg.topology, cfg.fault.kind, cfg.locator, true_distance=d, derivative=derivative)
    except NoPlateauError as exc:
        timing["locate"] = time.perf_counter() - t
        cand = exc.candidate
        est = cand.estimate if cand is not None else None
        return RunReport(fp, d, est, None if est is None else abs(est - d),
                         None if est is None else 100 * abs(est - d) / cfg.topology.D1,
                         None if cand is None else cand.duration,
                         None if cand is None else cand.t_start, None if cand is None else cand.t_end,
                         "no_plateau", str(exc), timing)
    timing["locate"] = time.perf_counter() - t
    return RunReport(fp, d, res.distance_estimate, res.absolute_error_km, res.percent_error,
                     res.plateau.duration, res.plateau.t_start, res.plateau.t_end, "ok", "", timing)


def remote_estimates(w: Waveform, topology: NetworkTopology, fault: FaultSpec) -> Dict[str, np.ndarray]:
    """Estimated remote currents keyed by the channel they predict."""
    i1 = w["i_dc1"]
    d, D1 = fault.distance_km, topology.D1
    if topology.configuration == MULTI_TERMINAL:
        i2 = estimator.estimate_remote_current_multiterminal(i1, d, topology.lengths)
        return {"i_dc2": i2, **estimator.multiterminal_siblings(i2, topology.lengths)}
    if fault.kind == PTP:
        return {"i_dc2": estimator.estimate_remote_current_ptp(i1, d, D1)}
    return {"i_dc2": estimator.estimate_remote_current_ptg(
        i1, d, D1, topology.faulted_section.r_per_km,
        topology.terminal_1.grounding_resistance, topology.terminal_2.grounding_resistance)}


def post_fault_window(w: Waveform, span=100e-6):
    """Slice covering ``span`` seconds from the fault inception sample."""
    k0 = int(np.argmax(w.post_fault_mask()))
    return slice(k0, k0 + int(round(span * w.sample_rate)) + 1)
