"""
Two routes to the same linear oscillator
========================================

For a constant-parameter oscillator the mass-normalised and the
stiffness-normalised identifications must agree, and both must return
sqrt(k/m) and c/(2m).
"""

# %%
import numpy as np

from varinertia import identify, identify_forcevib, identify_forcevibmod, load_scenario, simulate_scenario

sc = load_scenario("linear")
p = sc.params
sim = simulate_scenario(sc)
res = identify(sim.excitation, sim.response, sc.pipeline)

# %%
by_stiffness = identify_forcevibmod(res.excitation, res.response, res.k)
by_mass = identify_forcevib(res.excitation, res.response, p.m)
v = by_stiffness.valid & by_mass.valid & res.trajectory.valid
for name, traj in (("stiffness-normalised", by_stiffness), ("mass-normalised", by_mass)):
    print(f"{name:22s} omega_n {np.median(traj.omega_n[v]):8.3f} rad/s, h {np.median(traj.h[v]):6.3f} 1/s")
print(f"{'analytic':22s} omega_n {np.sqrt(p.k / p.m):8.3f} rad/s, h {p.c / (2 * p.m):6.3f} 1/s")
