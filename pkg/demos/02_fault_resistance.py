# %% [markdown]
# Robustness to fault resistance
#
# The fault resistance enters the quadratic only through beta, so the
# location should hold from a bolted fault up to several ohms. The worst
# error over three fault positions is printed per resistance.

# %%
from dcfaultloc import PTP, FaultSpec, NoPlateauError, locate, paper_default_topology
from dcfaultloc.study import simulate_waveform

topo = paper_default_topology()

# %%
for rf in (1e-3, 0.1, 0.5, 1.0, 5.0, 20.0):
    row = []
    for d in (0.5, 1.0, 1.5):
        w = simulate_waveform(topo, FaultSpec(PTP, d, rf))
        try:
            res = locate(w, topo, PTP, true_distance=d)
            row.append(f"{res.percent_error:8.2e}%")
        except NoPlateauError:
            row.append("no plateau")
    print(f"Rf = {rf:6g} ohm: " + "  ".join(row))
