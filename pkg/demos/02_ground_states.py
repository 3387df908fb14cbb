"""Ground states by normalised gradient flow, and their stability under the dynamics.

Run with ``python demos/02_ground_states.py`` (about half a minute).
"""
# %%
import warnings

from rotgpe import FlowConfig, GridSpec, Params
from rotgpe import functionals as fn
from rotgpe.minimize import (
    constant_phase_check,
    ground_state,
    ground_state_magnetic,
    ground_state_radial,
    linear_bottom,
    stability_probe,
)
from rotgpe.trials import critical_witness

warnings.simplefilter("ignore", RuntimeWarning)

# %% Sub-critical rotation: the minimiser is radial, so rotation does not change it
grid = GridSpec(10.0, 128)
cfg = FlowConfig(tol_residual=1e-8)
for omega in (0.0, 0.5):
    p = Params(gamma=1.0, omega_rot=omega, rho=1.0)
    gs = ground_state(p, cfg, grid)
    poho = fn.pohozaev_residuals(gs.state, p, gs.omega).max
    print(f"Omega={omega}: E={gs.energy:.10f} omega={gs.omega:.10f} iters={gs.iterations} "
          f"Pohozaev={poho:.1e} phase check={constant_phase_check(gs.state).passes}")
lb = linear_bottom(Params(gamma=1.0, v0=0.2), grid)
print(f"bottom of -Delta/2 + V with a 0.2 bump: {lb.omega_V0:.8f}")

# %% Critical rotation: plane solver against the radial solver
gamma = 0.1
for rho in (1.0, 3.14159):
    p = Params(gamma=gamma, omega_rot=gamma, rho=rho)
    plane = ground_state_magnetic(p, cfg, GridSpec(30.0, 128))
    rad = ground_state_radial(p, cfg, r_max=40.0, m=4000)
    print(f"rho={rho}: plane {plane.energy:.8f}  radial {rad.energy:.8f}")
print(f"Gaussian witness at mass pi: {critical_witness(gamma)[1]:.6f}")

# %% Orbital stability: a 1e-3 kick stays within a few 1e-3 of the orbit
p = Params(gamma=1.0, omega_rot=0.5, rho=1.0)
rep = stability_probe(p, FlowConfig(), 1e-3, 2.0, GridSpec(8.0, 64), dt=1e-3, log_every=250)
for t, d in rep.trace:
    print(f"t={t:5.2f}  distance {d:.3e}")
