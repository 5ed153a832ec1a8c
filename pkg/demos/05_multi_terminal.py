# %% [markdown]
# Multi-terminal network
#
# Five terminals joined through a common junction. The fault lies on the
# section between terminal 1 and the junction. The locator is the same
# single-terminal algorithm; the remote-current gain now accounts for the
# parallel inductance of the other branches.

# %%
import numpy as np

from dcfaultloc import MULTI_TERMINAL, PTP, FaultSpec, locate, multiterminal_gain, paper_default_topology
from dcfaultloc.study import post_fault_window, simulate_waveform

topo = paper_default_topology(MULTI_TERMINAL)
print("branch lengths (km):", topo.lengths)

# %%
for d in (0.5, 1.0, 1.5):
    w = simulate_waveform(topo, FaultSpec(PTP, d, 1e-3))
    res = locate(w, topo, PTP, true_distance=d)
    s = post_fault_window(w, 20e-6)
    i1, i2 = w["i_dc1"][s.start + 1:s.stop], w["i_dc2"][s.start + 1:s.stop]
    ratio = float(np.dot(i1, i2) / np.dot(i1, i1))
    print(f"d = {d} km: estimate {res.distance_estimate:.6f} km, "
          f"gain {multiterminal_gain(d, topo.lengths):.3f} vs simulated i2/i1 {ratio:.3f}")
