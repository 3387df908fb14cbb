"""Self-check table: closed-form golden values and identities evaluated numerically."""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import functionals as fn
from . import trials as tr
from .evolve import EvolveConfig, evolve, nonlinear_substep, strang_step
from .grid import GridSpec, apply_Lz, quadrature_fault, random_smooth_field
from .minimize import FlowConfig, extract_omega, ground_state, linear_bottom


@dataclass
class Outcome:
    name: str
    expected: float
    got: float
    tol: float
    mode: str = "rel"

    @property
    def passed(self) -> bool:
        e, g, t = self.expected, self.got, self.tol
        if not np.isfinite(g):
            return False
        if self.mode == "rel":
            return abs(g - e) <= t * max(abs(e), 1e-300)
        if self.mode == "abs":
            return abs(g - e) <= t
        if self.mode == "lt":  # got < expected
            return g < e
        if self.mode == "gt":
            return g > e
        raise ValueError(self.mode)


CHECKS = []


def check(name):
    def deco(func):
        CHECKS.append((name, func))
        return func
    return deco


REF = GridSpec(12.0, 256)


def _gauss(b=0.5, lam=1.0):
    return tr.GaussianTrial(lam, b).field(REF)


# -- Gaussian closed forms ------------------------------------------------


@check("gaussian/mass")
def _():
    return Outcome("", math.pi, fn.mass(_gauss()), 1e-8)


@check("gaussian/kinetic")
def _():
    return Outcome("", math.pi, fn.kinetic(_gauss()), 1e-8)


@check("gaussian/xmoment")
def _():
    return Outcome("", math.pi, fn.moment(_gauss()), 1e-8)


@check("gaussian/l4")
def _():
    return Outcome("", math.pi / 2, fn.lp_norm_p(_gauss(), 4), 1e-8)


@check("gaussian/log_moment")
def _():
    return Outcome("", -math.pi / 2, fn.log_moment(_gauss()), 1e-8)


@check("gaussian/magnetic_kinetic")
def _():
    return Outcome("", 1.04 * math.pi, fn.magnetic_kinetic(_gauss(), 0.2), 1e-8)


@check("gaussian/potential")
def _():
    p = fn.Params(gamma=0.3, gamma0=0.7, v0=0.4)
    exact = tr.gaussian_moments(tr.GaussianTrial(1.0, 0.5), p).gauss_potential
    return Outcome("", exact, fn.potential_energy(_gauss(), p), 1e-8)


@check("gaussian/critical_energy_0.27pi")
def _():
    p = fn.Params(gamma=0.2, omega_rot=0.2)
    return Outcome("", 0.27 * math.pi, fn.energy(_gauss(), p), 1e-8)


@check("gaussian/nehari_sign")
def _():
    gamma, b, lam2 = 0.1, 0.05, math.exp(-0.5)
    grid = GridSpec(30.0, 256)
    f = tr.GaussianTrial(math.sqrt(lam2), b).field(grid)
    got = fn.nehari_K(f, fn.Params(gamma=gamma), 0.0) / (lam2 * math.pi)
    return Outcome("", 2 - 1 / (gamma * math.sqrt(math.e)), got, 1e-8)


# -- vortex states --------------------------------------------------------


def _vortex(m, rho, gamma, half=10.0, n=256):
    t = tr.VortexTrial(m, rho, gamma)
    return t, t.field(GridSpec(half, n))


@check("vortex/mass_m3")
def _():
    _, f = _vortex(3, 2.5, 1.0)
    return Outcome("", 2.5, fn.mass(f), 1e-8)


@check("vortex/kinetic_m2")
def _():
    _, f = _vortex(2, 1.0, 1.0)
    return Outcome("", 3.0, fn.kinetic(f), 1e-8)


@check("vortex/ang_mom_m1")
def _():
    _, f = _vortex(1, 2.0, 1.0)
    return Outcome("", 2.0, fn.angular_momentum(f), 1e-8)


@check("vortex/Lz_eigen_m4")
def _():
    _, f = _vortex(4, 1.0, 1.0)
    return Outcome("", 0.0, float(np.max(np.abs(apply_Lz(f).values - 4 * f.values))), 1e-8, "abs")


@check("vortex/l6_m1")
def _():
    t, f = _vortex(1, 1.0, 1.0)
    return Outcome("", tr.vortex_l6(t), fn.lp_norm_p(f, 6), 1e-8)


@check("vortex/I_gamma_m")
def _():
    return Outcome("", 0.125, tr.radial_gamma_integral(2.0, 1), 1e-15)


@check("vortex/divergence_slope")
def _():
    curve = tr.vortex_energy_curve(fn.Params(gamma=1.0, gamma0=1.0, omega_rot=2.0), 16)
    return Outcome("", -1.0, curve[16].E_total - curve[15].E_total, 0.05)


# -- thresholds and constants ----------------------------------------------


@check("threshold/H_at_critical_gamma")
def _():
    th = tr.threshold_functions(1.0)
    return Outcome("", 0.0, tr.threshold_functions(th.gamma_critical).H_at_b0, 1e-15, "abs")


@check("threshold/G_at_2b0")
def _():
    th = tr.threshold_functions(0.1)
    return Outcome("", th.H_at_b0, tr.witness_G(2 * th.b0, th.b0, 0.1), 1e-12, "abs")


@check("threshold/witness_negative")
def _():
    return Outcome("", 0.0, tr.critical_witness(0.1)[1], 0.0, "lt")


@check("cubic/residual")
def _():
    q = tr.cubic_ground_state()
    return Outcome("", 1e-11, q.residual, 0.0, "lt")


@check("cubic/gn_sharpness")
def _():
    q = tr.cubic_ground_state()
    grid = GridSpec(16.0, 256)
    f = q.profile.lift(grid)
    ratio = fn.lp_norm_p(f, 4) / (fn.kinetic(f) * fn.mass(f))
    return Outcome("", q.gn_constant, ratio, 1e-6)


@check("window/must_be_trivial")
def _():
    v = fn.check_nonexistence_window(0.5, 1.0, fn.Params(gamma=1.0))
    return Outcome("", 1.0, float(v is fn.Verdict.MUST_BE_TRIVIAL), 0.0, "abs")


@check("window/admissible")
def _():
    v = fn.check_nonexistence_window(-0.09, 0.1, fn.Params(gamma=0.1))
    return Outcome("", 1.0, float(v is fn.Verdict.ADMISSIBLE), 0.0, "abs")


@check("dichotomy/half_split")
def _():
    k1, _ = fn.dichotomy_constants(2.0, 1.0, 0.5)
    return Outcome("", 1 - math.log(2), k1, 1e-14)


# -- identities on random fields ------------------------------------------


def _random(seed, grid=GridSpec(10.0, 128)):
    return random_smooth_field(grid, np.random.default_rng(seed), degree=3, width=1.0)


@check("identities/magnetic_energy")
def _():
    f = _random(1)
    p = fn.Params(gamma=0.7, gamma0=1.0, v0=0.3, omega_rot=0.7)
    return Outcome("", fn.energy(f, p), fn.energy_magnetic(f, p), 1e-9)


@check("identities/action_nehari")
def _():
    f = _random(2)
    p = fn.Params(gamma=1.0, v0=0.2)
    lhs = fn.action_S(f, p, 0.3) - 0.5 * fn.nehari_K(f, p, 0.3)
    rhs = -0.5 * fn.log_moment_plain(f) - 0.25 * fn.lp_norm_p(f, 4)
    return Outcome("", rhs, lhs, 1e-10)


@check("identities/pohozaev_combination")
def _():
    f = _random(3)
    p = fn.Params(gamma=1.0, v0=0.2)
    rep = fn.pohozaev_residuals(f, p, 0.4)
    return Outcome("", rep.raw[0] - 2 * rep.raw[1], rep.raw[2], 1e-12)


@check("identities/conjugate_ang_mom")
def _():
    f = _random(4)
    return Outcome("", -fn.angular_momentum(f), fn.angular_momentum(f.conj()), 1e-12)


# -- evolution -------------------------------------------------------------


@check("evolve/substep_intensity")
def _():
    y, _ = nonlinear_substep(np.array([1.0]), 3.0, 0.25, 0.0)
    return Outcome("", 0.5, float(y[0]), 1e-15)


@check("evolve/substep_small_loss_limit")
def _():
    y0 = np.array([0.7])
    _, th0 = nonlinear_substep(y0, 0.5, 0.0, 0.0)
    _, th1 = nonlinear_substep(y0, 0.5, 1e-12, 0.0)
    return Outcome("", float(th0[0]), float(th1[0]), 1e-10, "abs")


@check("evolve/harmonic_phase")
def _():
    grid = GridSpec(8.0, 64)
    phi0 = grid.sample(lambda a, b: np.exp(-0.5 * (a * a + b * b)) / math.sqrt(math.pi))
    out = evolve(phi0, fn.Params(gamma=1.0), EvolveConfig(2.5e-4, 0.25, 1000, linear_mode=True))
    err = float(np.max(np.abs(out.final_state.values - np.exp(-0.25j) * phi0.values)))
    return Outcome("", 0.0, err, 1e-8, "abs")


@check("evolve/mass_isometry")
def _():
    f = _random(5)
    p = fn.Params(gamma=1.0, v0=0.2, omega_rot=0.3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        g = strang_step(f, p, 0.01)
    return Outcome("", fn.mass(f), fn.mass(g), 1e-12)


# -- minimisation ----------------------------------------------------------


@check("minimize/linear_bottom")
def _():
    lb = linear_bottom(fn.Params(gamma=1.0), GridSpec(8.0, 64))
    return Outcome("", 1.0, lb.omega_V0, 1e-8)


@check("minimize/pohozaev")
def _():
    p = fn.Params(gamma=1.0, rho=1.0)
    gs = ground_state(p, FlowConfig(tol_residual=1e-8), GridSpec(8.0, 64))
    return Outcome("", 1e-5, fn.pohozaev_residuals(gs.state, p, gs.omega).max, 0.0, "lt")


@check("minimize/omega_consistency")
def _():
    p = fn.Params(gamma=1.0, rho=1.0)
    gs = ground_state(p, FlowConfig(tol_residual=1e-8), GridSpec(8.0, 64))
    return Outcome("", gs.omega, extract_omega(gs.state, p), 1e-7)


# -- counterexample --------------------------------------------------------------


@check("counterexample/lhs")
def _():
    ce = tr.modulus_magnetic_counterexample(1.0, 10.0)
    return Outcome("", ce.lhs_exact, ce.lhs, 1e-8)


@check("counterexample/violation")
def _():
    ce = tr.modulus_magnetic_counterexample(1.0, 10.0)
    return Outcome("", ce.lhs, ce.rhs, 0.0, "gt")


def run_checks(name_filter=None, fault_scale=None, stream=None):
    """Run the table and return ``(outcomes, first_failure_name)``."""
    import sys

    stream = stream or sys.stdout
    selected = [(n, f) for n, f in CHECKS if not name_filter or name_filter in n]
    outcomes = []
    header = f"{'check':40s} {'expected':>22s} {'got':>22s} {'tol':>9s} pass"
    print(header, file=stream)
    print("-" * len(header), file=stream)
    start = time.time()

    def evaluate():
        for name, func in selected:
            try:
                out = func()
            except Exception as exc:  # a crashing check is a failing check
                out = Outcome(name, float("nan"), float("nan"), 0.0)
                print(f"{name:40s} raised {exc.__class__.__name__}: {exc}", file=stream)
            out.name = name
            outcomes.append(out)
            print(f"{name:40s} {out.expected:22.15g} {out.got:22.15g} {out.tol:9.1e} "
                  f"{'yes' if out.passed else 'NO'}", file=stream, flush=True)

    if fault_scale is not None:
        with quadrature_fault(fault_scale):
            evaluate()
    else:
        evaluate()
    failed = [o.name for o in outcomes if not o.passed]
    print(f"{len(outcomes) - len(failed)}/{len(outcomes)} checks passed in {time.time() - start:.1f} s",
          file=stream)
    if failed:
        print(f"first failing check: {failed[0]}", file=stream)
    return outcomes, (failed[0] if failed else None)
