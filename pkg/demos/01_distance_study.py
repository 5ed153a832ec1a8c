# %% [markdown]
# Distance study on a point-to-point link
#
# A 2 km, 760 V pole-to-pole link with 10 uH reactors at both ends. Three
# solid faults are placed at a quarter, half and three quarters of the line.
# The locator sees only terminal 1. For each case we print the plateau
# estimate, its error as a percentage of the line length and how long the
# root trace stays settled.

# %%
import numpy as np

from dcfaultloc import PTP, FaultSpec, LocatorConfig, locate, paper_default_topology
from dcfaultloc.study import simulate_waveform

topo = paper_default_topology()
print(f"line length D1 = {topo.D1} km, CLR = {topo.terminal_1.clr_inductance * 1e6:g} uH")

# %%
for d in (0.5, 1.0, 1.5):
    w = simulate_waveform(topo, FaultSpec(PTP, d, 1e-3))
    res = locate(w, topo, PTP, LocatorConfig(window_samples=3), true_distance=d)
    print(f"d = {d:.2f} km -> {res.distance_estimate:.6f} km, "
          f"error {res.percent_error:.2e} %, plateau {res.plateau.duration * 1e6:.1f} us")

# %% [markdown]
# The root trace itself: before the trigger nothing is solved; afterwards
# the valid root sits on the true distance and the other root on D1.

# %%
w = simulate_waveform(topo, FaultSpec(PTP, 1.0, 1e-3))
res = locate(w, topo, PTP, true_distance=1.0)
tr = res.root_trace
for k in (0, 1, 2, 10, 100, 1000):
    print(f"t - t0 = {(tr.t[k] - tr.t[0]) * 1e6:7.1f} us  valid {tr.valid_root[k]:.6f}  "
          f"other {tr.invalid_root[k]:.6f}")

# %% [markdown]
# Larger sliding windows average more samples. In this linear model every
# window size still lands on the answer; w = 20 is systematically, though
# only slightly, further off than w = 3 at d = 0.5 km.

# %%
for ws in (3, 5, 10, 20):
    errs = []
    for d in (0.5, 1.0, 1.5):
        wv = simulate_waveform(topo, FaultSpec(PTP, d, 1e-3))
        errs.append(locate(wv, topo, PTP, LocatorConfig(window_samples=ws), true_distance=d).absolute_error_km)
    print(f"w = {ws:2d}: |error| km " + "  ".join(f"{e:.2e}" for e in errs) + f"  median {np.median(errs):.2e}")
