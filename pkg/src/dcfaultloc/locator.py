"""Single-terminal fault location from consecutive-sample combinations.

Along the faulted loop the cable-side voltage obeys

    v_dc1 = d (r i1 + l di1/dt) + Rf * D1/(D1 - d) * i1,      di1/dt = u1 / Lm

where u1 is the CLR voltage and Lm the CLR inductance of the loop. Dividing
by i1, multiplying by (D1 - d) and subtracting the same relation at a second
instant removes the unknown Rf and gives, per pair of samples (t1, t2),

    d^2 (l/Lm) alpha - d [beta + (l D1/Lm) alpha] + D1 beta = 0
    alpha = u1(t1) i1(t2) - u1(t2) i1(t1)
    beta  = v_dc1(t1) i1(t2) - v_dc1(t2) i1(t1)

The quadratic always factors as (d - D1)((l/Lm) alpha d - beta): one root is
the far end of the line, introduced by the (D1 - d) multiplication, and the
other carries the fault distance. Classification therefore rejects roots at
D1 as well as roots outside the line.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .measurement import Waveform, finite_difference_derivative
from .scenarios import PTP, NetworkTopology

#: roots within this fraction of D1 from the far end are the trivial root
FAR_END_TOLERANCE = 1e-6
#: |a| below this fraction of the record maximum means a linear equation
DEGENERACY_FLOOR = 1e-12


class LocatorError(RuntimeError):
    pass


class NoTriggerError(LocatorError):
    pass


class NoPlateauError(LocatorError):
    """No run of valid roots met the plateau criteria.

    ``candidate`` is the longest sub-threshold run (a :class:`Plateau`) or
    None when no index was classified at all.
    """

    def __init__(self, message, candidate=None, root_trace=None):
        super().__init__(message)
        self.candidate = candidate
        self.root_trace = root_trace


@dataclass
class LocatorConfig:
    window_samples: int = 3
    trigger_threshold: Optional[float] = None  # V on |u1|; None -> 1% of pre-fault pole voltage
    plateau_relative_tolerance: float = 0.01
    plateau_min_duration: float = 1e-6
    analysis_span: float = 200e-6

    def __post_init__(self):
        if not 2 <= int(self.window_samples) <= 20:
            raise ValueError("window_samples must be between 2 and 20")
        if self.trigger_threshold is not None and not self.trigger_threshold > 0:
            raise ValueError("trigger_threshold must be positive")
        if not (self.plateau_relative_tolerance > 0 and self.plateau_min_duration > 0 and self.analysis_span > 0):
            raise ValueError("plateau and span settings must be positive")


@dataclass
class RootTrace:
    t: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    root_a: np.ndarray
    root_b: np.ndarray
    valid_root: np.ndarray = None    # chosen root, NaN where unclassified
    invalid_root: np.ndarray = None
    valid_mask: np.ndarray = None

    def __len__(self):
        return len(self.root_a)


@dataclass
class Plateau:
    start: int
    stop: int  # inclusive
    t_start: float
    t_end: float
    estimate: float
    spread: float
    duration: float


@dataclass
class LocatorResult:
    root_trace: RootTrace
    plateau: Plateau
    distance_estimate: float
    trigger_index: int
    trigger_time: float
    samples_used: int
    D1: float
    true_distance: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def plateau_interval(self):
        return (self.plateau.t_start, self.plateau.t_end)

    @property
    def absolute_error_km(self):
        if self.true_distance is None:
            return None
        return abs(self.distance_estimate - self.true_distance)

    @property
    def percent_error(self):
        """100 |d_hat - d| / D1, i.e. normalised by the line length."""
        if self.true_distance is None:
            return None
        return 100.0 * self.absolute_error_km / self.D1


def detect_fault(w: Waveform, config: LocatorConfig) -> int:
    """Index of the first sample with ``|u1|`` above the trigger threshold."""
    u1 = w["u1"]
    threshold = config.trigger_threshold
    if threshold is None:
        threshold = 0.01 * abs(w["v1"][0]) if "v1" in w else None
        if not threshold:
            raise NoTriggerError("no trigger threshold configured")
    above = np.flatnonzero(np.abs(u1) > threshold)
    if above.size == 0:
        raise NoTriggerError(f"|u1| never exceeds {threshold:g} V")
    return int(above[0])


def alpha_beta(u1, i1, v_dc1, w: int):
    """Bilinear combinations over sample pairs (n, n + w)."""
    u1, i1, v_dc1 = (np.asarray(x, dtype=float) for x in (u1, i1, v_dc1))
    if not len(u1) == len(i1) == len(v_dc1):
        raise LocatorError("series differ in length")
    if w < 1 or len(i1) < w + 1:
        raise LocatorError(f"need more than {w} samples")
    alpha = u1[:-w] * i1[w:] - u1[w:] * i1[:-w]
    beta = v_dc1[:-w] * i1[w:] - v_dc1[w:] * i1[:-w]
    return alpha, beta


def solve_distance_quadratic(alpha, beta, l_per_km, clr, pole_count, D1, t=None) -> RootTrace:
    """Roots of the distance quadratic at every index.

    ``l_per_km`` and ``clr`` are per-conductor values; the loop inductance per
    km and the loop CLR both scale by ``pole_count``, so their ratio does not.
    """
    if not clr > 0:
        raise LocatorError("clr must be positive")
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    k = (pole_count * l_per_km) / (pole_count * clr)
    a = k * alpha
    b = -(beta + k * D1 * alpha)
    c = D1 * beta
    root_a = np.full(a.shape, np.nan)
    root_b = np.full(a.shape, np.nan)

    amax = np.max(np.abs(a)) if a.size else 0.0
    linear = np.abs(a) <= DEGENERACY_FLOOR * amax
    lin_ok = linear & (b != 0)
    root_a[lin_ok] = -c[lin_ok] / b[lin_ok]

    quad = ~linear
    disc = b**2 - 4 * a * c
    ok = quad & (disc >= 0)
    sgn = np.where(b >= 0, 1.0, -1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        q = -0.5 * (b + sgn * np.sqrt(np.where(ok, disc, 0.0)))
        r1 = q / a
        r2 = np.where(q != 0, c / q, np.nan)
    root_a[ok] = r1[ok]
    root_b[ok] = r2[ok]
    if t is None:
        t = np.arange(len(a), dtype=float)
    return RootTrace(np.asarray(t, dtype=float), alpha, beta, root_a, root_b)


def _admissible(x, D1):
    return np.isfinite(x) & (x >= 0) & (x <= D1) & (np.abs(x - D1) > FAR_END_TOLERANCE * D1)


def classify_roots(trace: RootTrace, D1) -> RootTrace:
    """Pick the root inside the line at each index.

    A root sitting at D1 is the trivial far-end root and never counts. When
    both roots are admissible the one nearer the previous valid value wins
    (the one farther from D1 before any valid value exists).
    """
    ra, rb = trace.root_a, trace.root_b
    oka, okb = _admissible(ra, D1), _admissible(rb, D1)
    valid = np.full(ra.shape, np.nan)
    invalid = np.full(ra.shape, np.nan)
    prev = math.nan
    for n in range(len(ra)):
        if oka[n] and okb[n]:
            if math.isnan(prev):
                pick_a = abs(ra[n] - D1) >= abs(rb[n] - D1)
            else:
                pick_a = abs(ra[n] - prev) <= abs(rb[n] - prev)
        elif oka[n] or okb[n]:
            pick_a = bool(oka[n])
        else:
            invalid[n] = ra[n] if np.isfinite(ra[n]) else rb[n]
            continue
        valid[n], invalid[n] = (ra[n], rb[n]) if pick_a else (rb[n], ra[n])
        prev = valid[n]
    trace.valid_root = valid
    trace.invalid_root = invalid
    trace.valid_mask = np.isfinite(valid)
    return trace


def _longest_run(values, start, tol):
    """Longest contiguous finite run from ``start`` on with max - min <= tol."""
    best = (0, start, start - 1)
    lo = start
    hi_q, lo_q = deque(), deque()
    for n in range(start, len(values)):
        x = values[n]
        if not np.isfinite(x):
            lo = n + 1
            hi_q.clear()
            lo_q.clear()
            continue
        while hi_q and values[hi_q[-1]] <= x:
            hi_q.pop()
        hi_q.append(n)
        while lo_q and values[lo_q[-1]] >= x:
            lo_q.pop()
        lo_q.append(n)
        while values[hi_q[0]] - values[lo_q[0]] > tol:
            lo += 1
            if hi_q[0] < lo:
                hi_q.popleft()
            if lo_q[0] < lo:
                lo_q.popleft()
        if n - lo + 1 > best[0]:
            best = (n - lo + 1, lo, n)
    return best


def extract_plateau(trace: RootTrace, config: LocatorConfig, sample_rate, D1, start_index=None) -> Plateau:
    """Longest settled run of the valid root after the solver warm-up.

    Indices before ``start_index`` (default: the window length, i.e. pairs
    whose second sample is still inside the switching edge) are excluded.
    The estimate is the run median.
    """
    if trace.valid_root is None:
        classify_roots(trace, D1)
    start = config.window_samples if start_index is None else start_index
    tol = config.plateau_relative_tolerance * D1
    length, lo, hi = _longest_run(trace.valid_root, start, tol)
    if length == 0:
        raise NoPlateauError("no valid roots after the warm-up region", None, trace)
    run = trace.valid_root[lo:hi + 1]
    plateau = Plateau(lo, hi, float(trace.t[lo]), float(trace.t[hi]), float(np.median(run)),
                      float(run.max() - run.min()), length / sample_rate)
    if plateau.duration < config.plateau_min_duration * (1 - 1e-9):
        raise NoPlateauError(
            f"longest settled run lasts {plateau.duration * 1e6:.3g} us "
            f"(< {config.plateau_min_duration * 1e6:.3g} us)", plateau, trace)
    return plateau


def trigger_threshold_for(topology: NetworkTopology, config: LocatorConfig):
    if config.trigger_threshold is not None:
        return config.trigger_threshold
    return 0.01 * topology.terminal_1.initial_voltage / 2


def locate(w: Waveform, topology: NetworkTopology, fault_kind=PTP, config: Optional[LocatorConfig] = None,
           true_distance=None, derivative="clr") -> LocatorResult:
    """Trigger, form alpha/beta, solve, classify and pick the plateau.

    ``derivative="finite_difference"`` replaces the measured CLR voltage with
    ``Lm * di1/dt`` from differencing ``i_dc1``; it exists for comparison.
    Only terminal-1 channels are read.
    """
    config = config or LocatorConfig()
    missing = [c for c in ("u1", "i_dc1", "v_dc1") if c not in w]
    if missing:
        raise LocatorError(f"waveform lacks channels {missing}")
    pole_count = 2 if fault_kind == PTP else 1
    clr = topology.terminal_1.clr_inductance
    l_per_km = topology.faulted_section.l_per_km
    D1 = topology.D1
    fs = w.sample_rate
    ws = int(config.window_samples)

    cfg = LocatorConfig(ws, trigger_threshold_for(topology, config), config.plateau_relative_tolerance,
                        config.plateau_min_duration, config.analysis_span)
    k0 = detect_fault(w, cfg)
    stop = min(len(w), k0 + int(round(config.analysis_span * fs)) + ws + 1)
    i1 = w["i_dc1"][k0:stop]
    v = w["v_dc1"][k0:stop]
    if derivative == "clr":
        u = w["u1"][k0:stop]
    elif derivative == "finite_difference":
        u = pole_count * clr * finite_difference_derivative(w["i_dc1"], fs)[k0:stop]
    else:
        raise ValueError(f"unknown derivative mode {derivative!r}")
    if len(i1) <= ws:
        raise LocatorError("record ends before the first window after the trigger")

    alpha, beta = alpha_beta(u, i1, v, ws)
    t1 = w.time[k0:k0 + len(alpha)]
    trace = solve_distance_quadratic(alpha, beta, l_per_km, clr, pole_count, D1, t=t1)
    classify_roots(trace, D1)
    try:
        plateau = extract_plateau(trace, cfg, fs, D1)
    except NoPlateauError as exc:
        exc.root_trace = trace
        raise
    return LocatorResult(trace, plateau, plateau.estimate, k0, float(w.time[k0]), len(i1), D1, true_distance,
                         {"window_samples": ws, "trigger_threshold": cfg.trigger_threshold,
                          "pole_count": pole_count, "derivative": derivative})
