"""
Stick-slip: inertia that depends on the friction regime
=======================================================

A second mass rides on the first through Coulomb friction.  While it
sticks, both masses move together; once the inertial force exceeds the
friction limit it slips, and the oscillator sheds inertia.  The
identified frequency therefore moves from f_stick to f_slip, and the
friction shows up as a hump in the damping.
"""

# %%
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from varinertia import identify, load_scenario, simulate_scenario, stitch_backbone

out = Path("figures")
out.mkdir(exist_ok=True)

# %%
# Amplitudes are reported as acceleration envelopes, in which the slip
# threshold is simply mu g.
runs, k = [], None
for force in (0.02, 0.05, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0):
    sc = load_scenario("stick_slip", {"excitation.amplitude": repr(force)})
    sim = simulate_scenario(sc)
    res = identify(sim.excitation, sim.response, sc.pipeline, k)
    k = res.k if k is None else k
    runs.append(res.trajectory)
p = sc.params
curve = stitch_backbone(runs, bins=60)

# %%
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
ax1.plot(curve.amplitude, curve.omega_n / (2 * np.pi), "k.-")
ax1.axhline(p.f_stick, color="0.5", ls=":")
ax1.axhline(p.f_slip, color="0.5", ls=":")
ax2.plot(curve.amplitude, curve.h, "k.-")
ax2.axhline(p.h_stick, color="0.5", ls=":")
for ax in (ax1, ax2):
    ax.axvline(p.mu * p.g, color="r", lw=0.8)
    ax.set_xscale("log")
    ax.set_xlabel("acceleration amplitude [m/s^2]")
ax1.set_ylabel("natural frequency [Hz]")
ax2.set_ylabel("damping coefficient h [1/s]")
fig.tight_layout()
fig.savefig(out / "stick_slip_backbone.svg")
