import io
import math

import numpy as np
import pytest

from dcfaultloc.measurement import (MeasurementError, NoiseSpec, Waveform, add_wgn, clr_derivative,
                                    finite_difference_derivative, measured_snr_db, sample, waveform_from_csv,
                                    waveform_to_csv)
from dcfaultloc.scenarios import FaultSpec, paper_default_topology, simulate_fault
from dcfaultloc.study import simulate_waveform

from conftest import trace_for, waveform_for

CLR = paper_default_topology().terminal_1.clr_inductance


def test_decimation_takes_every_tenth_point():
    tr = trace_for()
    w = sample(tr, 10e6)
    np.testing.assert_array_equal(w["i_dc1"], tr["i_dc1"][::10])
    np.testing.assert_allclose(w.time, tr.time[::10], rtol=0, atol=1e-12)
    np.testing.assert_array_equal(w["u1"], w["v1"] - w["v_dc1"])


def test_internal_rate_is_identity():
    tr = trace_for()
    w = sample(tr, 1.0 / tr.internal_step)
    np.testing.assert_array_equal(w["v_dc1"], tr["v_dc1"])
    assert len(w) == len(tr)


@pytest.mark.parametrize("rate", [3e6, 7e6, 2e8])
def test_non_commensurate_or_too_fast_rates_fail(rate):
    with pytest.raises(MeasurementError):
        sample(trace_for(), rate)


def test_channel_map_and_missing_probe():
    tr = trace_for()
    w = sample(tr, 10e6, channel_map={"i_local": "i_dc1"})
    assert set(w.channels) == {"i_local"}
    with pytest.raises(MeasurementError, match="i_dc9"):
        sample(tr, 10e6, channel_map={"x": "i_dc9"})


def test_infinite_snr_returns_identical_copy():
    w = waveform_for()
    n = add_wgn(w, NoiseSpec(math.inf, 3))
    for ch in w.channels:
        np.testing.assert_array_equal(n[ch], w[ch])
    assert n[ch] is not w[ch]


def test_noise_is_seeded():
    w = waveform_for()
    a, b = add_wgn(w, NoiseSpec(40, 7)), add_wgn(w, NoiseSpec(40, 7))
    c = add_wgn(w, NoiseSpec(40, 8))
    for ch in w.channels:
        np.testing.assert_array_equal(a[ch], b[ch])
    assert not np.array_equal(a["i_dc1"], c["i_dc1"])


def test_noisy_bus_voltage_stays_consistent():
    n = add_wgn(waveform_for(), NoiseSpec(40, 1))
    np.testing.assert_allclose(n["v1"], n["v_dc1"] + n["u1"], rtol=0, atol=1e-9)


def test_realised_snr_within_one_db():
    topo = paper_default_topology()
    w = simulate_waveform(topo, FaultSpec(distance_km=1.0, resistance=0.1), post_fault=1e-3)
    mask = w.post_fault_mask()
    assert mask.sum() >= 10_000
    n = add_wgn(w, NoiseSpec(40.0, 11))
    for ch in ("u1", "v_dc1", "i_dc1", "i_dc2"):
        assert measured_snr_db(w[ch], n[ch], mask) == pytest.approx(40.0, abs=1.0)


def test_noise_needs_post_fault_window():
    w = Waveform(1e6, 0.0, {"x": np.ones(10)}, fault_time=1.0)
    with pytest.raises(MeasurementError):
        add_wgn(w, NoiseSpec(30, 0))


def test_clr_derivative_arithmetic():
    assert np.all(clr_derivative(np.zeros(5), 1e-3) == 0)
    np.testing.assert_allclose(clr_derivative(np.full(4, 760.0), 1e-3, 2), 380e3)
    np.testing.assert_allclose(clr_derivative(np.full(4, 380.0), 1e-3, 1), 380e3)
    with pytest.raises(MeasurementError):
        clr_derivative(np.ones(3), 0.0)
    with pytest.raises(MeasurementError):
        clr_derivative(np.ones(3), 1e-3, pole_count=3)


def test_finite_difference_basics():
    t = np.arange(50) / 10e6
    np.testing.assert_allclose(finite_difference_derivative(3.5 * t, 10e6), 3.5, rtol=1e-9)
    assert np.all(finite_difference_derivative(np.full(10, 2.0), 10e6) == 0)
    with pytest.raises(MeasurementError):
        finite_difference_derivative([1.0, 2.0], 1.0)


def _post_window(w, span=100e-6):
    k0 = int(np.argmax(w.post_fault_mask()))
    # skip the sample at the current kink, where a centred difference straddles it
    return slice(k0 + 1, k0 + 1 + int(round(span * w.sample_rate)))


def test_clr_and_finite_difference_agree_on_clean_data():
    w = waveform_for()
    s = _post_window(w)
    clr = clr_derivative(w["u1"], CLR, 2)[s]
    fd = finite_difference_derivative(w["i_dc1"], w.sample_rate)[s]
    assert np.sqrt(np.mean((fd - clr) ** 2)) / np.sqrt(np.mean(clr**2)) < 0.01


def test_clr_derivative_is_more_noise_robust():
    w = waveform_for(rf=0.1)
    s = _post_window(w)
    truth = clr_derivative(w["u1"], CLR, 2)[s]
    n = add_wgn(w, NoiseSpec(40.0, 5))
    err_clr = clr_derivative(n["u1"], CLR, 2)[s] - truth
    err_fd = finite_difference_derivative(n["i_dc1"], n.sample_rate)[s] - truth
    assert np.sqrt(np.mean(err_fd**2)) > np.sqrt(np.mean(err_clr**2))


def test_csv_round_trip():
    w = waveform_for(d=0.5)
    text = waveform_to_csv(w, extra_meta={"note": "x"})
    header = [l for l in text.splitlines() if not l.startswith("#")][0]
    assert header.startswith("t,v1,v_dc1,u1,i_dc1,i_dc2,v_dc2")
    back = waveform_from_csv(io.StringIO(text))
    assert back.sample_rate == w.sample_rate
    assert back.fingerprint == w.fingerprint and back.fault_time == w.fault_time
    for ch in w.channels:
        np.testing.assert_allclose(back[ch], w[ch], rtol=1e-11, atol=1e-12)
    np.testing.assert_allclose(back.time, w.time, rtol=1e-14)


def test_one_ms_record_row_count():
    topo = paper_default_topology()
    tr = simulate_fault(topo, FaultSpec(inception_time=0.5e-3), pre_fault=0.5e-3, post_fault=0.5e-3)
    text = waveform_to_csv(sample(tr, 10e6))
    rows = [l for l in text.splitlines() if l and not l.startswith("#")]
    assert len(rows) - 1 == 10001


def test_csv_errors():
    with pytest.raises(MeasurementError):
        waveform_from_csv(io.StringIO("x,v1\n0,1\n"))
    with pytest.raises(MeasurementError):
        waveform_from_csv(io.StringIO("t,v1\n0,1,2\n1,2,3\n"))


def test_waveform_validation():
    with pytest.raises(MeasurementError):
        Waveform(1e6, 0.0, {"a": np.ones(3), "b": np.ones(4)})
    with pytest.raises(MeasurementError):
        Waveform(1e6, 0.0, {"a": np.ones(3)})["nope"]
