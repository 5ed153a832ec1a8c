import functools

import pytest

from dcfaultloc.measurement import NoiseSpec
from dcfaultloc.scenarios import (MULTI_TERMINAL, POINT_TO_POINT, PTP, FaultSpec, paper_default_topology,
                                  simulate_fault)
from dcfaultloc.study import simulate_waveform


@functools.lru_cache(maxsize=None)
def trace_for(kind=PTP, d=1.0, rf=1e-3, configuration=POINT_TO_POINT, post_fault=200e-6):
    topo = paper_default_topology(configuration)
    return simulate_fault(topo, FaultSpec(kind, d, rf), post_fault=post_fault)


@functools.lru_cache(maxsize=None)
def waveform_for(kind=PTP, d=1.0, rf=1e-3, configuration=POINT_TO_POINT, snr_db=float("inf"), seed=0):
    topo = paper_default_topology(configuration)
    noise = None if snr_db == float("inf") else NoiseSpec(snr_db, seed)
    return simulate_waveform(topo, FaultSpec(kind, d, rf), noise=noise)


@pytest.fixture(scope="session")
def ptp_topology():
    return paper_default_topology(POINT_TO_POINT)


@pytest.fixture(scope="session")
def mt_topology():
    return paper_default_topology(MULTI_TERMINAL)
