import warnings

import numpy as np
import pytest

from dcfaultloc.estimator import (EstimatorError, estimate_remote_current_ptg, estimate_remote_current_ptp,
                                  estimation_diagnostics, gamma_at_inception, multiterminal_gain,
                                  multiterminal_siblings, ptg_gain, ptp_gain, rotv)
from dcfaultloc.scenarios import P_PTG, PTP, FaultSpec, paper_default_topology
from dcfaultloc.study import post_fault_window, remote_estimates

from conftest import waveform_for


def test_rotv_limits():
    v = np.linspace(700, 760, 20)
    np.testing.assert_array_equal(rotv(v, v).gamma, 1.0)
    np.testing.assert_array_equal(rotv(np.zeros(20), v).gamma, 0.0)


def test_rotv_masks_small_bus_voltage():
    out = rotv(np.array([1.0, 1.0, 1.0]), np.array([100.0, 0.5, 50.0]))
    assert list(out.valid) == [True, False, True]
    assert np.isnan(out.gamma[1])
    with pytest.raises(EstimatorError):
        rotv(np.ones(3), np.zeros(3))
    with pytest.raises(EstimatorError):
        rotv(np.ones(3), np.ones(4))


def test_gamma_at_inception_values():
    assert gamma_at_inception(1e-3, 1.0, 1e-3) == 0.5
    assert gamma_at_inception(0.35e-3, 1e-9, 1e-3) == pytest.approx(0.0, abs=1e-9)
    # 0.7 mH / 1.7 mH
    assert gamma_at_inception(0.35e-3, 2.0, 1e-3) == pytest.approx(7 / 17, rel=1e-12)
    assert round(gamma_at_inception(0.35e-3, 2.0, 1e-3), 4) == 0.4118
    with pytest.raises(EstimatorError):
        gamma_at_inception(0.35e-3, 0.0, 1e-3)


def test_simulated_gamma_right_after_inception():
    topo = paper_default_topology()
    w = waveform_for(d=1.0)
    k = int(np.argmax(w.post_fault_mask()))
    g = rotv(w["v_dc1"], w["v1"]).gamma[k]
    expect = gamma_at_inception(topo.faulted_section.l_per_km, 1.0, topo.terminal_1.clr_inductance)
    assert g == pytest.approx(expect, rel=0.05)


def test_ptp_gain_examples():
    assert ptp_gain(1.0, 2.0) == 1.0
    np.testing.assert_allclose(estimate_remote_current_ptp(np.array([3.0]), 0.5, 2.0), [1.0])
    with pytest.warns(RuntimeWarning, match="far end"):
        g = ptp_gain(1.999, 2.0)
    assert g == pytest.approx(1999.0)
    for bad in (0.0, 2.0, -0.1):
        with pytest.raises(EstimatorError):
            ptp_gain(bad, 2.0)


def test_ptp_gain_is_quiet_away_from_far_end():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ptp_gain(1.9, 2.0)


def test_ptg_gain_examples():
    assert ptg_gain(1.0, 2.0, 0.25, 0.1, 0.1) == 1.0
    assert ptg_gain(0.5, 2.0, 0.0, 0.3, 0.2) == pytest.approx(1.5)
    assert ptg_gain(0.5, 2.0, 0.25, 0.1, 0.1) == pytest.approx(0.225 / 0.475)
    assert round(ptg_gain(0.5, 2.0, 0.25, 0.1, 0.1), 4) == 0.4737
    np.testing.assert_allclose(estimate_remote_current_ptg(np.ones(3), 1.0, 2.0, 0.25, 0.1, 0.1), 1.0)
    with pytest.raises(EstimatorError):
        ptg_gain(0.5, 2.0, 0.0, 0.1, 0.0)


def test_multiterminal_gain_examples():
    lengths = (2.0, 1.5, 1.0, 1.0, 2.0, 0.5, 0.5)
    assert multiterminal_gain(2.0, lengths) == pytest.approx(2.0 / 1.5)
    assert multiterminal_gain(1.0, (2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 0.0)) == pytest.approx(1 / 7)
    with pytest.raises(EstimatorError):
        multiterminal_gain(1.0, lengths[:6])
    with pytest.raises(EstimatorError):
        multiterminal_gain(2.5, lengths)
    with pytest.raises(EstimatorError):
        multiterminal_gain(1.0, (2.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0))


def test_multiterminal_siblings_split_by_length():
    lengths = (2.0, 1.5, 1.0, 1.0, 2.0, 0.5, 0.5)
    sib = multiterminal_siblings(np.array([3.0]), lengths)
    assert sorted(sib) == ["i_dc3", "i_dc4", "i_dc5", "i_dc6"]
    assert sib["i_dc3"][0] == pytest.approx(4.5)
    assert sib["i_dc4"][0] == pytest.approx(3.0)
    assert sib["i_dc5"][0] == pytest.approx(1.8)
    assert sib["i_dc6"][0] == pytest.approx(4.5)


def test_diagnostics_normalisation():
    x = np.linspace(1, 2, 10)
    d = estimation_diagnostics(x, x)
    assert d.nrmse == 0 and np.all(d.epsilon == 0)
    assert estimation_diagnostics(np.zeros(5), np.full(5, 4.0)).nrmse == 1.0
    with pytest.raises(EstimatorError):
        estimation_diagnostics(np.zeros(5), np.zeros(5))
    with pytest.raises(EstimatorError):
        estimation_diagnostics(np.zeros(5), np.ones(5), slice(5, 9))


@pytest.mark.parametrize("kind", [PTP, P_PTG])
def test_midpoint_estimate_equals_local_current(kind):
    topo = paper_default_topology()
    w = waveform_for(kind, 1.0)
    est = remote_estimates(w, topo, FaultSpec(kind, 1.0))
    np.testing.assert_array_equal(est["i_dc2"], w["i_dc1"])
    diag = estimation_diagnostics(est["i_dc2"], w["i_dc2"], post_fault_window(w))
    assert diag.nrmse < 1e-6


def test_ptp_nrmse_grows_with_fault_resistance():
    topo = paper_default_topology()
    out = []
    for rf in (1e-3, 1.0, 5.0):
        w = waveform_for(PTP, 0.5, rf)
        i2_hat = estimate_remote_current_ptp(w["i_dc1"], 0.5, topo.D1)
        out.append(estimation_diagnostics(i2_hat, w["i_dc2"], post_fault_window(w)).nrmse)
    assert out[0] <= out[1] <= out[2]
