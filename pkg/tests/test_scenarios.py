import numpy as np
import pytest

from dcfaultloc.estimator import estimate_remote_current_multiterminal, estimation_diagnostics
from dcfaultloc.scenarios import (DEFAULT_BRANCH_LENGTHS, MULTI_TERMINAL, N_PTG, P_PTG, POINT_TO_POINT, PTP,
                                  CableSection, FaultSpec, NetworkTopology, ScenarioError, TerminalSpec,
                                  build_circuit, build_ptg_circuit, build_ptp_circuit, paper_default_topology,
                                  simulate_fault)

from conftest import trace_for


def _post(tr, span=None):
    m = tr.time >= 1.0 - 1e-12
    if span is not None:
        m &= tr.time <= 1.0 + span
    return m


def test_point_to_point_defaults():
    topo = paper_default_topology(POINT_TO_POINT)
    assert topo.D1 == 2.0
    assert topo.terminal_1 == topo.terminal_2
    assert topo.terminal_1.initial_voltage == 760.0


def test_multi_terminal_defaults():
    topo = paper_default_topology(MULTI_TERMINAL)
    assert topo.lengths == (2.0,) + DEFAULT_BRANCH_LENGTHS
    assert len(topo.terminals()) == 6
    assert all(t.initial_voltage == 760.0 for t in topo.terminals())


@pytest.mark.parametrize("kwargs", [
    dict(configuration="ring"),
    dict(branch_lengths_km=(1.0,) * 6),
    dict(configuration=MULTI_TERMINAL, branch_lengths_km=(1.0,) * 5, remote_terminals=(TerminalSpec(),) * 4),
    dict(configuration=MULTI_TERMINAL, branch_lengths_km=(1.0,) * 6),
])
def test_topology_validation(kwargs):
    with pytest.raises(ScenarioError):
        NetworkTopology(**kwargs)


def test_value_validation():
    with pytest.raises(ScenarioError):
        CableSection(r_per_km=0.0)
    with pytest.raises(ScenarioError):
        TerminalSpec(bus_capacitance=-1.0)
    with pytest.raises(ScenarioError):
        FaultSpec(kind="PTX")
    with pytest.raises(ScenarioError):
        FaultSpec(resistance=-0.1)


@pytest.mark.parametrize("d", [0.0, 2.0, 2.5, -1.0])
def test_fault_distance_must_be_inside_line(d):
    with pytest.raises(ScenarioError):
        build_circuit(paper_default_topology(), FaultSpec(PTP, d))


def test_builders_reject_mismatched_kinds():
    topo = paper_default_topology()
    with pytest.raises(ScenarioError):
        build_ptp_circuit(topo, FaultSpec(P_PTG))
    with pytest.raises(ScenarioError):
        build_ptg_circuit(topo, FaultSpec(PTP))
    with pytest.raises(ScenarioError):
        build_ptp_circuit(paper_default_topology(MULTI_TERMINAL), FaultSpec(PTP))


def test_fingerprint_is_deterministic_and_sensitive():
    a, b = paper_default_topology(), paper_default_topology()
    assert a.fingerprint(FaultSpec()) == b.fingerprint(FaultSpec())
    assert a.fingerprint(FaultSpec()) != a.fingerprint(FaultSpec(distance_km=1.1))
    assert a.fingerprint() != paper_default_topology(MULTI_TERMINAL).fingerprint()


def test_ptp_midpoint_is_symmetric():
    tr = trace_for(PTP, 1.0)
    np.testing.assert_allclose(tr["i_dc1"], tr["i_dc2"], rtol=0, atol=1e-7 * np.max(np.abs(tr["i_dc1"])))


def test_ptg_midpoint_is_symmetric():
    tr = trace_for(P_PTG, 1.0)
    np.testing.assert_allclose(tr["i_dc1"], tr["i_dc2"], rtol=0, atol=1e-7 * np.max(np.abs(tr["i_dc1"])))


def test_n_ptg_mirrors_p_ptg():
    p, n = trace_for(P_PTG, 0.5, 0.1), trace_for(N_PTG, 0.5, 0.1)
    for ch in ("v1", "v_dc1", "i_dc1", "i_dc2", "i_f"):
        np.testing.assert_allclose(n[ch], -p[ch], rtol=1e-12, atol=1e-12)


def test_fault_resistance_lowers_peak_current():
    low, high = trace_for(P_PTG, 0.5, 1e-3), trace_for(P_PTG, 0.5, 5.0)
    assert np.max(np.abs(high["i_dc1"])) < np.max(np.abs(low["i_dc1"]))


def test_near_terminal_fault_clr_share():
    topo = paper_default_topology()
    d = 0.001
    tr = simulate_fault(topo, FaultSpec(PTP, d, 1e-3), post_fault=2e-6)
    k = int(np.argmax(tr.time >= 1.0 - 1e-12)) + 1
    clr, l = topo.terminal_1.clr_inductance, topo.faulted_section.l_per_km
    u1 = tr["v1"][k] - tr["v_dc1"][k]
    assert u1 == pytest.approx(tr["v1"][k] * clr / (clr + l * d), rel=0.02)
    assert u1 / tr["v1"][k] > 0.95


def test_no_fault_means_no_current():
    topo = paper_default_topology(MULTI_TERMINAL)
    # inception far beyond the simulated span
    tr = simulate_fault(topo, FaultSpec(PTP, 1.0, inception_time=1.0), post_fault=-0.5, pre_fault=0.5 + 1e-4)
    assert tr.time[-1] < 1.0
    for k in range(1, 7):
        assert np.max(np.abs(tr[f"i_dc{k}"])) == 0.0 or np.max(np.abs(tr[f"i_dc{k}"])) < 1e-12
    assert np.max(np.abs(tr["i_f"])) == 0.0


def test_multi_terminal_kcl_at_fault():
    tr = trace_for(PTP, 1.0, 1e-3, MULTI_TERMINAL)
    total = sum(tr[f"i_dc{k}"] for k in range(1, 7))
    m = _post(tr)
    scale = np.max(np.abs(tr["i_f"]))
    # i_f through the fault resistor lags the closed-switch current by the
    # capacitor-free junction only, so KCL holds sample by sample
    assert np.max(np.abs(total[m] - tr["i_f"][m])) / scale < 1e-6


def test_ptp_kcl_at_fault():
    tr = trace_for(PTP, 0.5, 0.1)
    m = _post(tr)
    np.testing.assert_allclose(tr["i_dc1"][m] + tr["i_dc2"][m], tr["i_f"][m],
                               atol=1e-6 * np.max(np.abs(tr["i_f"])))


@pytest.mark.parametrize("rf", [1e-3, 1.0])
def test_multi_terminal_remote_estimate(rf):
    topo = paper_default_topology(MULTI_TERMINAL)
    tr = trace_for(PTP, 0.5, rf, MULTI_TERMINAL)
    m = _post(tr, 100e-6)
    i2_hat = estimate_remote_current_multiterminal(tr["i_dc1"][m], 0.5, topo.lengths)
    assert estimation_diagnostics(i2_hat, tr["i_dc2"][m]).nrmse <= 0.20
