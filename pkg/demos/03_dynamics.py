"""Time evolution: conservation without loss, decay with three-body loss.

Run with ``python demos/03_dynamics.py`` (about twenty seconds).
"""
# %%
import warnings

import numpy as np

from rotgpe import EvolveConfig, GridSpec, Params, evolve
from rotgpe.evolve import extinction_experiment

warnings.simplefilter("ignore", RuntimeWarning)

grid = GridSpec(14.0, 128)
f0 = grid.sample(lambda a, b: 0.3 * (1 + 0.1 * (a + 1j * b)) * np.exp(-0.25 * (a * a + b * b)))

# %% Conserved quantities in the rotating frame
p = Params(gamma=0.5, v0=0.2, omega_rot=0.25)
traj = evolve(f0, p, EvolveConfig(1e-3, 2.0, 250))
for name in ("mass", "ang_mom", "energy"):
    v = traj.column(name)
    print(f"{name:8s} start {v[0]:.12f}  max rel change {np.max(np.abs(v - v[0])) / abs(v[0]):.2e}")

# %% Energy error of Strang splitting shrinks like dt^2
for dt in (4e-3, 2e-3, 1e-3):
    v = evolve(f0 * (1 / 0.3), p, EvolveConfig(dt, 1.0, int(0.05 / dt))).column("energy")
    print(f"dt={dt:.0e}  energy wobble {np.ptp(v) / v[0]:.2e}")

# %% Three-body loss: the mass decays, no faster than the t^(-1/4) envelope allows
small = GridSpec(10.0, 64)
g0 = small.sample(lambda a, b: 1.2 * np.exp(-0.5 * (a * a + b * b)))
rep = extinction_experiment(g0, Params(gamma=1.0, k3=0.1), EvolveConfig(0.01, 40.0, 1), slope_from=10.0)
for t in (0, 1, 5, 10, 20, 40):
    i = int(np.argmin(np.abs(rep.times - t)))
    print(f"t={rep.times[i]:5.1f}  M={rep.masses[i]:.6f}  t^(1/4) M={rep.times[i] ** 0.25 * rep.masses[i]:.4f}")
print(f"late log-log slope {rep.late_slope:.3f}, mass-law residual {rep.mass_law_max:.1e}")
