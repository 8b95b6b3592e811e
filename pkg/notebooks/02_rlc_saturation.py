"""
Saturating inductor: stitching several drive levels
====================================================

The inductance of the circuit falls from L_nom to L_ds as the current
passes i_star, so the resonance climbs from f_nom towards f_ds.  Each drive
voltage covers part of the current range; the backbones are stitched and
checked against free oscillations of the lossless circuit.
"""

# %%
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from varinertia import RlcParams, identify, load_scenario, simulate_scenario, stitch_backbone, sweep_free_backbone
from varinertia.simulators import RLC_VOLTAGES

out = Path("figures")
out.mkdir(exist_ok=True)

# %%
# The charge is identified against the applied voltage, so the fitted
# stiffness is 1/C.  It is fitted on the lowest drive and reused, since a
# capacitance does not depend on the drive.
runs, k = [], None
for volt in RLC_VOLTAGES:
    sc = load_scenario(f"rlc_v{volt:g}")
    sim = simulate_scenario(sc)
    res = identify(sim.excitation, sim.response, sc.pipeline, k)
    if k is None:
        k = res.k
        print(f"C = {1 / k:.4e} F (true {sc.params.C:.4e})")
    runs.append(res.trajectory)
params = sc.params
curve = stitch_backbone(runs)

# %%
free = RlcParams(**{**params.__dict__, "R": 0.0})
oracle = sweep_free_backbone(free, np.geomspace(curve.amplitude.min(), curve.amplitude.max(), 20))

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
for volt, traj in zip(RLC_VOLTAGES, runs):
    a, w, _ = traj.selected()
    ax1.plot(a[::50], w[::50] / (2 * np.pi), ".", ms=1, alpha=0.3, label=f"{volt:g} V")
ax1.plot(curve.amplitude, curve.omega_n / (2 * np.pi), "k-", lw=1.5, label="stitched")
ax1.plot([s.amplitude for s in oracle], [s.omega_n / (2 * np.pi) for s in oracle], "rs", ms=4,
         label="free oscillation")
ax1.axhline(params.f_nom, color="0.5", ls=":")
ax1.axhline(params.f_ds, color="0.5", ls=":")
ax1.set_xscale("log")
ax1.set_xlabel("current amplitude [A]")
ax1.set_ylabel("natural frequency [Hz]")
ax1.legend(fontsize=7)
ax2.plot(curve.amplitude, curve.h, "k-")
ax2.set_xscale("log")
ax2.set_xlabel("current amplitude [A]")
ax2.set_ylabel("damping coefficient h [1/s]")
fig.tight_layout()
fig.savefig(out / "rlc_backbone.svg")
