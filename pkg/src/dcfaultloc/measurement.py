"""Terminal measurements: point sampling, white Gaussian noise, derivatives, CSV."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace
from typing import Dict, Mapping, Optional

import numpy as np

from .engine import RawTrace

REQUIRED_CHANNELS = ("v1", "v_dc1", "u1", "i_dc1")
_CSV_ORDER = ("v1", "v_dc1", "u1", "i_dc1", "i_dc2", "v_dc2")


class MeasurementError(ValueError):
    pass


@dataclass
class Waveform:
    """Uniformly sampled terminal record.

    ``fault_time`` (when known) marks the start of the post-fault window used
    for noise scaling; ``fingerprint`` tracks which scenario produced it.
    """

    sample_rate: float
    t0: float
    channels: Dict[str, np.ndarray]
    fault_time: Optional[float] = None
    fingerprint: str = ""

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise MeasurementError("sample_rate must be positive")
        lengths = {len(v) for v in self.channels.values()}
        if len(lengths) > 1:
            raise MeasurementError(f"channels differ in length: {lengths}")
        self.channels = {k: np.asarray(v, dtype=float) for k, v in self.channels.items()}

    def __len__(self):
        return len(next(iter(self.channels.values()))) if self.channels else 0

    def __getitem__(self, name):
        try:
            return self.channels[name]
        except KeyError:
            raise MeasurementError(f"waveform has no channel {name!r}") from None

    def __contains__(self, name):
        return name in self.channels

    @property
    def period(self):
        return 1.0 / self.sample_rate

    @property
    def time(self):
        return self.t0 + np.arange(len(self)) / self.sample_rate

    def post_fault_mask(self):
        if self.fault_time is None:
            return np.ones(len(self), dtype=bool)
        return self.time >= self.fault_time - 0.5 / self.sample_rate

    def with_channels(self, **channels):
        merged = dict(self.channels)
        merged.update(channels)
        return replace(self, channels=merged)


@dataclass(frozen=True)
class NoiseSpec:
    snr_db: float = math.inf
    seed: int = 0


def sample(trace: RawTrace, sample_rate: float = 10e6, channel_map: Optional[Mapping[str, str]] = None,
           fault_time: Optional[float] = None, fingerprint: str = "") -> Waveform:
    """Point-sample probes of ``trace`` (no anti-alias filter).

    ``channel_map`` maps output channel -> probe name; by default every probe
    is kept under its own name. ``u1`` is always derived as ``v1 - v_dc1``.
    """
    step = trace.internal_step
    if sample_rate > 1.0 / step * (1 + 1e-9):
        raise MeasurementError(f"sample rate {sample_rate:g} Hz exceeds the internal rate {1 / step:g} Hz")
    ratio = 1.0 / (sample_rate * step)
    decim = int(round(ratio))
    if decim < 1 or abs(ratio - decim) > 1e-9 * ratio:
        raise MeasurementError(f"sample period is not a multiple of the internal step (ratio {ratio:.6g})")
    if channel_map is None:
        channel_map = {name: name for name in trace.probes}
    channels = {}
    for out, probe in channel_map.items():
        if probe not in trace.probes:
            raise MeasurementError(f"trace has no probe {probe!r}")
        channels[out] = trace.probes[probe][::decim].copy()
    if "v1" in channels and "v_dc1" in channels:
        channels["u1"] = channels["v1"] - channels["v_dc1"]
    return Waveform(sample_rate, float(trace.time[0]), channels, fault_time, fingerprint)


def add_wgn(w: Waveform, spec: NoiseSpec, channels=None) -> Waveform:
    """Add seeded zero-mean Gaussian noise at ``spec.snr_db`` per channel.

    Signal power is measured over the post-fault window. ``v1`` is treated as
    derived: noise goes on the CLR voltage ``u1`` and on ``v_dc1``, and ``v1``
    is rebuilt as their sum so the three channels stay consistent.
    """
    if math.isinf(spec.snr_db) and spec.snr_db > 0:
        return replace(w, channels={k: v.copy() for k, v in w.channels.items()})
    mask = w.post_fault_mask()
    if not mask.any():
        raise MeasurementError("post-fault window is empty")
    if channels is None:
        channels = [k for k in w.channels if not (k == "v1" and "u1" in w.channels and "v_dc1" in w.channels)]
    rng = np.random.default_rng(spec.seed)
    out = {k: v.copy() for k, v in w.channels.items()}
    scale = 10.0 ** (-spec.snr_db / 10.0)
    for name in sorted(channels):
        x = w.channels[name]
        power = np.mean(x[mask] ** 2)
        out[name] = x + rng.normal(0.0, math.sqrt(power * scale), size=len(x))
    if "v1" not in channels and "u1" in out and "v_dc1" in out:
        out["v1"] = out["v_dc1"] + out["u1"]
    return replace(w, channels=out)


def measured_snr_db(clean, noisy, mask=None):
    clean, noisy = np.asarray(clean), np.asarray(noisy)
    if mask is not None:
        clean, noisy = clean[mask], noisy[mask]
    return 10 * np.log10(np.mean(clean**2) / np.mean((noisy - clean) ** 2))


def clr_derivative(u, clr_inductance: float, pole_count: int = 2):
    """di/dt from the CLR voltage: ``u / (pole_count * L)``. No differencing."""
    if not clr_inductance > 0:
        raise MeasurementError("clr_inductance must be positive")
    if pole_count not in (1, 2):
        raise MeasurementError("pole_count must be 1 or 2")
    return np.asarray(u, dtype=float) / (pole_count * clr_inductance)


def finite_difference_derivative(i, sample_rate: float):
    """Centered difference inside, one-sided at the ends."""
    i = np.asarray(i, dtype=float)
    if len(i) < 3:
        raise MeasurementError("need at least 3 samples")
    return np.gradient(i, 1.0 / sample_rate)


# -- CSV ------------------------------------------------------------------

def _ordered(names):
    head = [c for c in _CSV_ORDER if c in names]
    return head + sorted(c for c in names if c not in head)


def waveform_to_csv(w: Waveform, path_or_buf=None, extra_meta=None):
    """Write ``t,<channels>`` with ``#``-prefixed metadata lines first."""
    names = _ordered(w.channels)
    meta = {"sample_rate": repr(float(w.sample_rate)), "fingerprint": w.fingerprint}
    if w.fault_time is not None:
        meta["fault_time"] = repr(float(w.fault_time))
    meta.update(extra_meta or {})
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}={v}\n")
    buf.write(",".join(["t", *names]) + "\n")
    data = np.column_stack([w.time] + [w.channels[n] for n in names])
    np.savetxt(buf, data, delimiter=",", fmt=["%.15g"] + ["%.12g"] * len(names))
    text = buf.getvalue()
    if path_or_buf is None:
        return text
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w") as fh:
            fh.write(text)
    return text


def waveform_from_csv(path_or_buf) -> Waveform:
    text = path_or_buf.read() if hasattr(path_or_buf, "read") else open(path_or_buf).read()
    meta, lines = {}, text.splitlines()
    body = 0
    for body, line in enumerate(lines):
        if not line.startswith("#"):
            break
        key, _, value = line[1:].strip().partition("=")
        meta[key.strip()] = value.strip()
    header = [h.strip() for h in lines[body].split(",")]
    if not header or header[0] != "t":
        raise MeasurementError("CSV header must start with 't'")
    data = np.loadtxt(io.StringIO("\n".join(lines[body + 1:])), delimiter=",", ndmin=2)
    if data.shape[1] != len(header):
        raise MeasurementError("CSV rows do not match the header")
    t = data[:, 0]
    if "sample_rate" in meta:
        rate = float(meta["sample_rate"])
    elif len(t) > 1:
        rate = 1.0 / np.median(np.diff(t))
    else:
        raise MeasurementError("cannot infer sample rate")
    fault_time = float(meta["fault_time"]) if "fault_time" in meta else None
    channels = {name: data[:, k] for k, name in enumerate(header) if k > 0}
    return Waveform(rate, float(t[0]), channels, fault_time, meta.get("fingerprint", ""))
