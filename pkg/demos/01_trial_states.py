"""Trial states: Gaussians, vortices and the sign of the critical energy.

Run with ``python demos/01_trial_states.py``; prints tables, takes a few seconds.
"""
# %%
import math

import numpy as np

from rotgpe import GridSpec, Params
from rotgpe import functionals as fn
from rotgpe import trials as tr

grid = GridSpec(12.0, 256)

# %% Gaussian moments on the grid against their closed forms
t = tr.GaussianTrial(1.0, 0.5)
p = Params(gamma=0.2, omega_rot=0.2)
f = t.field(grid)
exact = tr.gaussian_moments(t, p)
for name, got, want in [("mass", fn.mass(f), exact.mass),
                        ("kinetic", fn.kinetic(f), exact.kinetic),
                        ("l4", fn.lp_norm_p(f, 4), exact.l4),
                        ("log moment", fn.log_moment(f), exact.log_moment)]:
    print(f"{name:12s} grid {got: .12f}   exact {want: .12f}")
print(f"critical energy {fn.energy(f, p):.12f} = 0.27 pi = {0.27 * math.pi:.12f}")

# %% Vortex family: with Omega = 2 gamma the energy drops by rho (Omega - gamma) per unit winding
p = Params(gamma=1.0, omega_rot=2.0, rho=1.0)
curve = tr.vortex_energy_curve(p, 20)
print("\n m    E_total      step")
prev = None
for row in curve:
    step = "" if prev is None else f"{row.E_total - prev: .5f}"
    print(f"{row.m:2d} {row.E_total: .6f} {step}")
    prev = row.E_total

# %% Negative critical energy needs a narrow, heavy Gaussian
for gamma in (0.05, 0.1, 0.2):
    th = tr.threshold_functions(gamma)
    trial, e = tr.critical_witness(gamma)
    print(f"gamma={gamma:4.2f}  H(b0)={th.H_at_b0: .5f}  witness energy {e: .6f} at mass "
          f"{math.pi * trial.lam ** 2 / (2 * trial.b):.4f}")
print(f"threshold gamma = {tr.threshold_functions(1.0).gamma_critical:.6f}")

# %% Sharp Gagliardo-Nirenberg constant from the cubic ground state
q = tr.cubic_ground_state()
print(f"\nQ(0) = {q.peak:.12f}, ||Q||^2 = {q.l2_squared:.10f}, C4 = {q.gn_constant:.10f}")
r = np.linspace(0, 6, 7)
print("Q(r):", np.array2string(q(r), precision=5))
