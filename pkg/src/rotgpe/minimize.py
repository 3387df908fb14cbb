"""Mass-constrained energy minimisation by a preconditioned normalised gradient flow.

One flow step, with ``H`` the energy gradient and ``mu = <phi, H phi> / rho``:

    phi <- phi - tau (1 + tau (alpha - Delta/2))^{-1} (H phi - mu phi),
    phi <- sqrt(rho) phi / ||phi||

The kinetic operator is inverted exactly in Fourier space and everything else
stays explicit.  Because the step is proportional to the constrained gradient,
its fixed points solve the stationary equation exactly, whatever ``tau`` and
``alpha`` are.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .evolve import EvolveConfig, evolve
from .functionals import (
    Params,
    Regime,
    energy,
    kinetic,
    log_moment_plain,
    mass,
    angular_momentum,
    potential_energy,
)
from .grid import (
    ComplexField,
    GridSpec,
    RadialField,
    apply_grad_A,
    fft2,
    ifft2,
    gradient,
    random_smooth_field,
    rotate_frame,
)


class NonexistenceRegime(ValueError):
    """Raised for ``Omega > gamma``, where the constrained energy is unbounded below."""


class FlowAbort(RuntimeError):
    pass


@dataclass(frozen=True)
class Seed:
    kind: str = "gaussian"
    value: float = 0.5

    def __post_init__(self):
        if self.kind not in ("gaussian", "vortex", "random"):
            raise ValueError(f"unknown seed kind {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "Seed":
        """``gaussian:b``, ``vortex:m`` or ``random:seed``."""
        kind, _, value = text.partition(":")
        if not value:
            raise ValueError(f"seed {text!r} must look like kind:value")
        v = float(value) if kind == "gaussian" else int(value)
        return cls(kind, v)

    def __str__(self):
        return f"{self.kind}:{self.value}"


@dataclass(frozen=True)
class FlowConfig:
    tau: float = 10.0
    tol_energy: float = 1e-12
    tol_residual: float = 1e-7
    max_iter: int = 20000
    seed_kind: Seed = field(default_factory=Seed)
    alpha: float | None = None

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        for name in ("tol_energy", "tol_residual"):
            v = getattr(self, name)
            if not (0 < v < 1e-2):
                raise ValueError(f"{name} must lie in (0, 1e-2), got {v}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class GroundStateResult:
    state: object
    energy: float
    omega: float
    residual: float
    iterations: int
    converged: bool
    negative_energy: bool = False
    energies: list = field(default_factory=list, repr=False)

    def summary_rows(self):
        return [("energy", self.energy), ("omega", self.omega), ("residual", self.residual),
                ("iterations", self.iterations), ("converged", int(self.converged)),
                ("negative_energy", int(self.negative_energy))]


# ----------------------------------------------------------------------------
# discrete energy gradients


def _ylny(y):
    safe = np.where(y > 0, y, 1.0)
    return np.where(y > 0, y * np.log(safe), 0.0)


class _PlaneOperator:
    """Energy and its gradient ``H f`` on a 2D grid."""

    def __init__(self, grid: GridSpec, p: Params, magnetic=False, nonlinear=True):
        self.grid = grid
        self.p = p
        self.magnetic = magnetic
        self.nonlinear = nonlinear
        x1, x2 = grid.mesh()
        self.x1, self.x2 = x1, x2
        r2 = x1 * x1 + x2 * x2
        k1, k2 = grid.kmesh()
        self.k1, self.k2 = k1, k2
        self.ksq = k1 * k1 + k2 * k2
        self.area = grid.cell_area
        if magnetic:
            self.scalar = p.v0 * np.exp(-p.gamma0 * r2)
            self.a1, self.a2 = -p.gamma * x2, p.gamma * x1
        else:
            self.scalar = p.potential(r2)
        # explicit part of the step is stable for any tau once alpha bounds
        # V - Omega L_z - |k|^2/2 from above; |Omega x.k| <= |k|^2/2 + Omega^2|x|^2/2
        omega = p.gamma if magnetic else p.omega_rot
        trap = 0.5 * p.gamma ** 2 * r2 if magnetic else 0.0
        self.alpha_default = 0.5 * float(np.max(self.scalar + trap + 0.5 * omega ** 2 * r2))

    def apply(self, v):
        """Return ``(H v, E(v))``."""
        y = v.real ** 2 + v.imag ** 2
        spec = fft2(v)
        if self.magnetic:
            g1 = ifft2(1j * self.k1 * spec) - 1j * self.a1 * v
            g2 = ifft2(1j * self.k2 * spec) - 1j * self.a2 * v
            # -1/2 (grad - iA).(grad - iA) v, using div A = 0
            h = -0.5 * (ifft2(1j * self.k1 * fft2(g1)) - 1j * self.a1 * g1
                        + ifft2(1j * self.k2 * fft2(g2)) - 1j * self.a2 * g2)
            quad = 0.5 * float(np.sum(np.abs(g1) ** 2 + np.abs(g2) ** 2)) * self.area
        else:
            h = ifft2(0.5 * self.ksq * spec)
            quad = 0.5 * float(np.sum(self.ksq * np.abs(spec) ** 2)) * self.area / v.size
            if self.p.omega_rot != 0:
                d1 = ifft2(1j * self.k1 * spec)
                d2 = ifft2(1j * self.k2 * spec)
                lz = 1j * (self.x2 * d1 - self.x1 * d2)
                h = h - self.p.omega_rot * lz
                quad -= self.p.omega_rot * float(np.real(np.sum(np.conj(v) * lz))) * self.area
        h = h + self.scalar * v
        quad += float(np.sum(self.scalar * y)) * self.area
        if self.nonlinear:
            h = h + _ylny(y) * v
            quad += 0.5 * float(np.sum(y * (_ylny(y) - 0.5 * y))) * self.area
        return h, quad

    def inner(self, a, b) -> float:
        return float(np.real(np.vdot(a, b))) * self.area

    def norm2(self, a) -> float:
        return float(np.sum(a.real ** 2 + a.imag ** 2)) * self.area

    def precondition(self, r, tau, alpha):
        return ifft2(fft2(r) / (1.0 + tau * (alpha + 0.5 * self.ksq)))


class _RadialOperator:
    """Finite-volume discretisation on cells ``r_j = (j + 1/2) h`` with ``f = 0`` past ``r_max``."""

    def __init__(self, r_max, m, p: Params, nonlinear=True):
        self.h = h = r_max / m
        self.m = m
        self.r = r = (np.arange(m) + 0.5) * h
        self.p = p
        self.nonlinear = nonlinear
        self.w = 2 * np.pi * r * h
        faces = (np.arange(m) + 1.0) * h  # r_{j+1/2}
        # -1/2 Delta_r as a symmetric form in the weighted inner product
        upper = -0.5 * faces[:-1] / (r[:-1] * h * h)
        lower = -0.5 * faces[:-1] / (r[1:] * h * h)
        left = np.concatenate([[0.0], faces[:-1]])
        diag = 0.5 * (faces + left) / (r * h * h)
        self.lap_diag, self.lap_upper, self.lap_lower = diag, upper, lower
        self.face_w = 2 * np.pi * faces * h
        self.pot = 0.5 * p.gamma ** 2 * r * r + p.v0 * np.exp(-p.gamma0 * r * r)
        # the potential is implicit here, so no shift is needed
        self.alpha_default = 0.0

    def linear(self, v):
        out = self.lap_diag * v + self.pot * v
        out[:-1] += self.lap_upper * v[1:]
        out[1:] += self.lap_lower * v[:-1]
        return out

    def apply(self, v):
        h = self.linear(v)
        # squared face differences avoid the cancellation of <v, -Delta v>
        dv = np.diff(np.append(v, 0.0)) / self.h
        e = 0.5 * float(np.sum(self.face_w * dv * dv)) + float(np.sum(self.pot * v * v * self.w))
        y = v * v
        if self.nonlinear:
            h = h + _ylny(y) * v
            e += 0.5 * float(np.sum(y * (_ylny(y) - 0.5 * y) * self.w))
        return h, e

    def inner(self, a, b):
        return float(np.sum(a * b * self.w))

    def norm2(self, a):
        return self.inner(a, a)

    def precondition(self, r, tau, alpha):
        # (1 + tau (alpha - Delta_r/2 + V))^{-1}, tridiagonal
        ab = np.zeros((3, self.m))
        ab[0, 1:] = tau * self.lap_upper
        ab[1] = 1.0 + tau * (alpha + self.lap_diag + self.pot)
        ab[2, :-1] = tau * self.lap_lower
        return solve_banded((1, 1), ab, r)


def _flow(op, v0, rho, cfg: FlowConfig):
    """Shared normalised-flow loop; returns (values, energy, mu, residual, iters, converged, energies)."""
    alpha = cfg.alpha if cfg.alpha is not None else op.alpha_default
    v = v0 * math.sqrt(rho / op.norm2(v0))
    hv, e = op.apply(v)
    tau = cfg.tau
    energies = [e]
    converged = False
    residual = float("inf")
    mu = op.inner(v, hv) / rho
    it = 0
    decrease = float("inf")
    for it in range(1, cfg.max_iter + 1):
        mu = op.inner(v, hv) / rho
        grad = hv - mu * v
        residual = math.sqrt(op.norm2(grad) / rho)
        if decrease < cfg.tol_energy and residual < cfg.tol_residual:
            converged = True
            it -= 1
            break
        while True:
            trial = v - tau * op.precondition(grad, tau, alpha)
            trial = trial * math.sqrt(rho / op.norm2(trial))
            h_trial, e_trial = op.apply(trial)
            if e_trial <= e + 1e-12 * abs(e) or tau < 1e-14:
                break
            tau *= 0.5
        if e_trial > e + 1e-12 * abs(e):
            raise FlowAbort(f"energy increased at iteration {it} even with tau = {tau:.2e}")
        decrease = (e - e_trial) / max(abs(e_trial), 1e-300)
        v, hv, e = trial, h_trial, e_trial
        energies.append(e)
        tau = min(2 * tau, cfg.tau)
    mu = op.inner(v, hv) / rho
    residual = math.sqrt(op.norm2(hv - mu * v) / rho)
    return v, e, mu, residual, it, converged, energies


# ----------------------------------------------------------------------------
# seeds


def seed_field(seed: Seed, grid: GridSpec, p: Params) -> ComplexField:
    if seed.kind == "gaussian":
        f = grid.sample(lambda x1, x2: np.exp(-seed.value * (x1 * x1 + x2 * x2)))
    elif seed.kind == "vortex":
        from .trials import VortexTrial, vortex_field

        f = vortex_field(VortexTrial(int(seed.value), p.rho, p.gamma), grid)
    else:
        rng = np.random.default_rng(int(seed.value))
        width = 1.0 / math.sqrt(p.gamma)
        f = random_smooth_field(grid, rng, degree=3, width=width * rng.uniform(0.8, 1.2))
    return f * math.sqrt(p.rho / mass(f))


def _finish(grid, v, e, mu, residual, it, converged, energies):
    if not converged:
        warnings.warn(f"flow stopped after {it} iterations without meeting both tolerances "
                      f"(residual {residual:.2e})", RuntimeWarning, stacklevel=3)
    return GroundStateResult(ComplexField(grid, v), e, -mu, residual, it, converged,
                             negative_energy=e < 0, energies=energies)


def ground_state(p: Params, cfg: FlowConfig = FlowConfig(), grid: GridSpec | None = None,
                 initial: ComplexField | None = None) -> GroundStateResult:
    """Minimise the rotating energy at mass ``p.rho`` for ``Omega < gamma``."""
    if p.regime is Regime.SUPER:
        raise NonexistenceRegime(
            f"Omega = {p.omega_rot} > gamma = {p.gamma}: the energy is unbounded below at fixed mass")
    if p.regime is Regime.CRITICAL:
        raise ValueError("Omega == gamma: use ground_state_magnetic")
    grid = grid or GridSpec(12.0, 256)
    f0 = initial if initial is not None else seed_field(cfg.seed_kind, grid, p)
    op = _PlaneOperator(grid, p)
    return _finish(grid, *_flow(op, f0.values, p.rho, cfg))


def ground_state_magnetic(p: Params, cfg: FlowConfig = FlowConfig(), grid: GridSpec | None = None,
                          initial: ComplexField | None = None) -> GroundStateResult:
    """Minimise the critical-rotation energy written with the magnetic gradient."""
    if p.regime is not Regime.CRITICAL:
        raise ValueError(f"ground_state_magnetic needs Omega == gamma, regime is {p.regime.value}")
    if p.v0 != 0:
        raise ValueError("ground_state_magnetic needs v0 == 0")
    from .trials import cubic_ground_state

    q2 = cubic_ground_state().l2_squared
    if p.rho > q2:
        warnings.warn(f"rho = {p.rho} exceeds ||Q||^2 = {q2:.6f}", RuntimeWarning, stacklevel=2)
    grid = grid or GridSpec(12.0, 256)
    f0 = initial if initial is not None else seed_field(cfg.seed_kind, grid, p)
    op = _PlaneOperator(grid, p, magnetic=True)
    return _finish(grid, *_flow(op, f0.values, p.rho, cfg))


def ground_state_radial(p: Params, cfg: FlowConfig = FlowConfig(), r_max: float = 25.0,
                        m: int = 5000) -> GroundStateResult:
    """Minimise over radial profiles; ``L_z f = 0`` so the rotation drops out."""
    op = _RadialOperator(r_max, m, p)
    b = cfg.seed_kind.value if cfg.seed_kind.kind == "gaussian" else p.gamma / 2
    v0 = np.exp(-b * op.r ** 2)
    v, e, mu, residual, it, converged, energies = _flow(op, v0, p.rho, cfg)
    if not converged:
        warnings.warn(f"radial flow stopped after {it} iterations (residual {residual:.2e})",
                      RuntimeWarning, stacklevel=2)
    return GroundStateResult(RadialField(r_max, v), e, -mu, residual, it, converged,
                             negative_energy=e < 0, energies=energies)


@dataclass
class LinearBottom:
    omega_V0: float
    eigenfunction: ComplexField
    residual: float


def linear_bottom(p: Params, grid: GridSpec | None = None, cfg: FlowConfig | None = None) -> LinearBottom:
    """Bottom of the spectrum of ``-Delta/2 + V`` by the same flow with the nonlinearity off."""
    grid = grid or GridSpec(10.0, 128)
    cfg = cfg or FlowConfig(tol_energy=1e-14, tol_residual=1e-9)
    q = p.replace(omega_rot=0.0, rho=1.0)
    op = _PlaneOperator(grid, q, nonlinear=False)
    f0 = grid.sample(lambda x1, x2: np.exp(-0.4 * p.gamma * (x1 * x1 + x2 * x2)))
    v, e, mu, residual, it, converged, _ = _flow(op, f0.values, 1.0, cfg)
    return LinearBottom(mu, ComplexField(grid, v), residual)


def extract_omega(phi: ComplexField, p: Params) -> float:
    """Multiplier making the first Pohozaev identity (with rotation) exact."""
    m = mass(phi)
    if m <= 0:
        raise ValueError("extract_omega needs a field with positive mass")
    num = -0.5 * kinetic(phi) - potential_energy(phi, p) - log_moment_plain(phi)
    if p.omega_rot != 0:
        num += p.omega_rot * angular_momentum(phi)
    return num / m


def stationarity_residual(phi: ComplexField, p: Params, omega: float) -> float:
    """``||H phi + omega phi|| / ||phi||``."""
    op = _PlaneOperator(phi.grid, p)
    hv, _ = op.apply(phi.values)
    return math.sqrt(op.norm2(hv + omega * phi.values) / op.norm2(phi.values))


# ----------------------------------------------------------------------------
# orbits and stability


def _inner(a: ComplexField, b: ComplexField, norm: str, gamma=None) -> complex:
    area = a.grid.cell_area
    total = np.vdot(a.values, b.values)
    if norm == "sigma":
        ga, gb = gradient(a), gradient(b)
        total += np.vdot(ga[0].values, gb[0].values) + np.vdot(ga[1].values, gb[1].values)
        r2 = a.grid.r2()
        total += np.vdot(a.values, r2 * b.values)
    elif norm == "h1a":
        if gamma is None:
            raise ValueError("the H1A norm needs gamma")
        ga, gb = apply_grad_A(a, gamma), apply_grad_A(b, gamma)
        total += np.vdot(ga[0].values, gb[0].values) + np.vdot(ga[1].values, gb[1].values)
    else:
        raise ValueError(f"unknown norm {norm!r}")
    return complex(total * area)


def field_norm(f: ComplexField, norm: str = "sigma", gamma=None) -> float:
    return math.sqrt(max(_inner(f, f, norm, gamma).real, 0.0))


def orbit_distance(u: ComplexField, phi: ComplexField, norm: str = "sigma", gamma=None) -> float:
    """``min_sigma ||u - e^{i sigma} phi||``; the minimiser is ``arg <phi, u>``."""
    if u.grid != phi.grid:
        raise ValueError(f"grid mismatch: {u.grid} vs {phi.grid}")
    sigma = np.angle(_inner(phi, u, norm, gamma))
    return field_norm(u - phi * np.exp(1j * sigma), norm, gamma)


@dataclass
class StabilityReport:
    sup_orbit_distance: float
    trace: list
    ground_residual: float
    initial_distance: float


def stability_probe(p: Params, cfg: FlowConfig, delta: float, t_end: float,
                    grid: GridSpec | None = None, dt: float = 1e-3, log_every: int = 100,
                    perturbation_seed: int = 1, ground: GroundStateResult | None = None) -> StabilityReport:
    """Perturb the ground state by ``delta`` in the Sigma norm and track the phase-orbit distance.

    The rotating-frame solution is compared with the ground state rotated by
    ``Omega t``; the Sigma norm is rotation invariant, so this equals the
    lab-frame distance to the orbit.
    """
    if p.regime is Regime.SUPER:
        raise NonexistenceRegime("no ground state for Omega > gamma")
    if p.k3 != 0:
        raise ValueError("stability_probe needs k3 == 0")
    grid = grid or GridSpec(12.0, 256)
    if ground is None:
        solver = ground_state_magnetic if p.regime is Regime.CRITICAL else ground_state
        ground = solver(p, cfg, grid)
    phi = ground.state
    rng = np.random.default_rng(perturbation_seed)
    g = random_smooth_field(grid, rng, degree=2, width=1.0 / math.sqrt(p.gamma))
    g = g * (1.0 / field_norm(g, "sigma"))
    u0 = phi + g * delta
    trace = []

    def hook(step, t, state):
        ref = rotate_frame(phi, p.omega_rot * t) if p.omega_rot * t != 0 else phi
        trace.append((t, orbit_distance(state, ref, "sigma")))

    evolve(u0, p, EvolveConfig(dt=dt, t_end=t_end, log_every=log_every), hook=hook, hook_every=log_every)
    dists = [d for _, d in trace]
    return StabilityReport(max(dists), trace, ground.residual, dists[0])


@dataclass
class PhaseCheck:
    positive: bool
    phase: float
    phase_spread: float
    passes: bool


def constant_phase_check(phi2d: ComplexField, tol: float = 1e-4, rel_floor: float = 1e-8) -> PhaseCheck:
    """Check that ``phi`` vanishes nowhere inside the grid and has a constant phase."""
    a = np.abs(phi2d.values)
    interior = a[1:-1, 1:-1]
    positive = bool(np.all(interior > 0))
    mask = a > rel_floor * a.max()
    z = phi2d.values[mask]
    phase = float(np.angle(np.sum(z * np.abs(z))))
    spread = float(np.max(np.abs(np.angle(z * np.exp(-1j * phase))))) if z.size else 0.0
    return PhaseCheck(positive, phase, spread, positive and spread < tol)
