"""Ratio of transient voltages and remote-terminal current estimates.

All remote estimates are the local current times a constant gain that depends
on the (known, for validation) fault distance. The locator never calls these
with an unknown distance; they exist to check the current-split assumption
against simulated remote currents.
"""
from __future__ import annotations

from dataclasses import dataclass

import warnings

import numpy as np


class EstimatorError(ValueError):
    pass


@dataclass
class RotvSeries:
    gamma: np.ndarray  # NaN where the bus voltage is below the floor
    valid: np.ndarray


@dataclass
class EstimationDiagnostics:
    epsilon: np.ndarray
    nrmse: float


def rotv(v_dc, v_bus, floor=None) -> RotvSeries:
    """gamma = v_dc / v_bus, masked where ``|v_bus|`` is under ``floor``.

    The default floor is 1% of the largest ``|v_bus|`` in the record, which
    is the pre-fault voltage for a discharging bus.
    """
    v_dc = np.asarray(v_dc, dtype=float)
    v_bus = np.asarray(v_bus, dtype=float)
    if v_dc.shape != v_bus.shape:
        raise EstimatorError("v_dc and v_bus differ in length")
    if floor is None:
        floor = 0.01 * np.max(np.abs(v_bus)) if v_bus.size else 0.0
    valid = np.abs(v_bus) > floor
    if not valid.any():
        raise EstimatorError("every bus-voltage sample is below the floor")
    gamma = np.full(v_bus.shape, np.nan)
    gamma[valid] = v_dc[valid] / v_bus[valid]
    return RotvSeries(gamma, valid)


def gamma_at_inception(l_per_km, d, clr):
    """l*d / (clr + l*d): the voltage ratio the instant the fault appears."""
    if not (l_per_km > 0 and d > 0 and clr > 0):
        raise EstimatorError("l_per_km, d and clr must be positive")
    ld = l_per_km * d
    return ld / (clr + ld)


NEAR_END_FRACTION = 1e-3


def _check_span(d, D1):
    if not 0.0 < d < D1:
        raise EstimatorError(f"fault distance {d} must lie strictly inside (0, {D1})")
    if D1 - d < NEAR_END_FRACTION * D1:
        warnings.warn(f"fault at {d} km is within {NEAR_END_FRACTION:g} of the far end; gain is ill-conditioned",
                      RuntimeWarning, stacklevel=3)


def ptp_gain(d, D1):
    _check_span(d, D1)
    return d / (D1 - d)


def ptg_gain(d, D1, r_per_km, rg1, rg2):
    _check_span(d, D1)
    den = r_per_km * (D1 - d) + rg2
    if den <= 0:
        raise EstimatorError("remote loop resistance is zero; gain undefined")
    return (r_per_km * d + rg1) / den


def multiterminal_gain(d, lengths):
    """Gain of the six-bus star network; ``lengths`` is (D1, ..., D7)."""
    if len(lengths) != 7:
        raise EstimatorError("need seven lengths D1..D7")
    D1, D2, D3, D4, D5, D6, D7 = lengths
    # D7 may be zero (buses 4-6 tied straight to the junction)
    if min(D1, D2, D3, D4, D5, D6) <= 0 or D7 < 0:
        raise EstimatorError("lengths D1..D6 must be positive and D7 non-negative")
    if not 0.0 < d <= D1:
        raise EstimatorError(f"fault distance {d} must lie in (0, {D1}]")
    bracket = 1.0 + D2 / D3 + sum(D2 / (Dk + D7) for Dk in (D4, D5, D6))
    return d / (D2 + (D1 - d) * bracket)


def estimate_remote_current_ptp(i1, d, D1):
    return ptp_gain(d, D1) * np.asarray(i1, dtype=float)


def estimate_remote_current_ptg(i1, d, D1, r_per_km, rg1, rg2):
    return ptg_gain(d, D1, r_per_km, rg1, rg2) * np.asarray(i1, dtype=float)


def estimate_remote_current_multiterminal(i1, d, lengths):
    return multiterminal_gain(d, lengths) * np.asarray(i1, dtype=float)


def multiterminal_siblings(i2_hat, lengths):
    """Estimates for buses 3-6 from the bus-2 estimate, keyed ``i_dc3``..``i_dc6``."""
    _, D2, D3, D4, D5, D6, D7 = lengths
    i2_hat = np.asarray(i2_hat, dtype=float)
    return {
        "i_dc3": D2 / D3 * i2_hat,
        "i_dc4": D2 / (D4 + D7) * i2_hat,
        "i_dc5": D2 / (D5 + D7) * i2_hat,
        "i_dc6": D2 / (D6 + D7) * i2_hat,
    }


def estimation_diagnostics(i_hat, i_actual, window=slice(None)) -> EstimationDiagnostics:
    """Error series and its RMS over ``window`` normalised by peak ``|i_actual|``."""
    i_hat = np.asarray(i_hat, dtype=float)
    i_actual = np.asarray(i_actual, dtype=float)
    if i_hat.shape != i_actual.shape:
        raise EstimatorError("series differ in length")
    eps = i_hat - i_actual
    e, ref = eps[window], i_actual[window]
    if e.size == 0:
        raise EstimatorError("empty evaluation window")
    peak = np.max(np.abs(ref))
    if peak == 0:
        raise EstimatorError("actual current is zero over the window; NRMSE undefined")
    return EstimationDiagnostics(eps, float(np.sqrt(np.mean(e**2)) / peak))
