"""Closed-form trial states and constants: Gaussians, vortex states, the
negative-energy threshold and the cubic ground state ``Q``."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as sint
from scipy.interpolate import BarycentricInterpolator
from scipy.special import gammaln

from .functionals import Params, SQRT_E
from .grid import ComplexField, GridSpec, RadialField

TRIAL_SWEEP_HEADER = "m,E_quadratic,E_log,E_total,L,l6"


# ----------------------------------------------------------------------------
# Gaussians  lambda * exp(-b |x|^2)


@dataclass(frozen=True)
class GaussianTrial:
    lam: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0 and np.isfinite(self.b) and self.b > 0):
            raise ValueError(f"need finite lam > 0 and b > 0, got {self.lam}, {self.b}")

    def field(self, grid: GridSpec) -> ComplexField:
        return grid.sample(lambda x1, x2: self.lam * np.exp(-self.b * (x1 * x1 + x2 * x2)))


@dataclass(frozen=True)
class GaussianMoments:
    mass: float
    xmoment: float
    kinetic: float
    magnetic_kinetic: float
    l4: float
    log_moment: float
    log_moment_plain: float
    gauss_potential: float


def gaussian_moments(t: GaussianTrial, p: Params) -> GaussianMoments:
    """Exact moments of ``lam * exp(-b|x|^2)``.

    ``log_moment`` is ``int |f|^4 ln(|f|^2/sqrt e)``, ``log_moment_plain`` drops
    the ``sqrt e``; ``gauss_potential`` is the full ``int V |f|^2``.
    """
    lam2, b, g = t.lam ** 2, t.b, p.gamma
    lam4 = lam2 * lam2
    ln_lam2 = math.log(lam2)
    return GaussianMoments(
        mass=lam2 * math.pi / (2 * b),
        xmoment=lam2 * math.pi / (4 * b * b),
        kinetic=lam2 * math.pi,
        magnetic_kinetic=lam2 * math.pi * (1 + g * g / (4 * b * b)),
        l4=lam4 * math.pi / (4 * b),
        log_moment=lam4 * math.pi / (4 * b) * (ln_lam2 - 1.0),
        log_moment_plain=lam4 * math.pi / (4 * b) * (ln_lam2 - 0.5),
        gauss_potential=lam2 * (g * g * math.pi / (8 * b * b) + math.pi * p.v0 / (p.gamma0 + 2 * b)),
    )


def gaussian_magnetic_energy(t: GaussianTrial, gamma: float) -> float:
    """Critical-rotation energy of ``lam f_b`` with no Gaussian bump."""
    m = gaussian_moments(t, Params(gamma=gamma, omega_rot=gamma))
    return 0.5 * m.magnetic_kinetic + 0.5 * m.log_moment


# ----------------------------------------------------------------------------
# negative-energy threshold


@dataclass(frozen=True)
class Thresholds:
    b0: float
    H_at_b0: float
    gamma_critical: float


def threshold_functions(gamma: float) -> Thresholds:
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    b0 = math.exp(-1.5) / 2
    return Thresholds(b0=b0, H_at_b0=gamma * gamma - 1.0 / (4 * math.e ** 3),
                      gamma_critical=1.0 / (2 * math.exp(1.5)))


def witness_G(theta, b, gamma):
    """``G(theta) = 4b^2 + gamma^2 - b theta + b theta ln(theta)``; sign of the witness energy."""
    return 4 * b * b + gamma * gamma - b * theta + b * theta * np.log(theta)


def witness_F(theta, b, gamma):
    """Critical energy of ``sqrt(theta) f_b`` as ``(pi theta / 8b^2) G(theta)``."""
    return np.pi * theta / (8 * b * b) * witness_G(theta, b, gamma)


def witness_H(b, gamma):
    """``H(b) = 2b^2 + gamma^2 + 2b^2 ln(2b)``; equals ``G(2b)``."""
    return 2 * b * b + gamma * gamma + 2 * b * b * np.log(2 * b)


def critical_witness(gamma: float) -> tuple[GaussianTrial, float]:
    """Gaussian at ``(lam^2, b) = (2 b0, b0)`` and its critical energy."""
    b0 = threshold_functions(gamma).b0
    t = GaussianTrial(math.sqrt(2 * b0), b0)
    return t, gaussian_magnetic_energy(t, gamma)


# ----------------------------------------------------------------------------
# vortex states  C z^m exp(-gamma |x|^2 / 2)


def radial_gamma_integral(gamma: float, m: int) -> float:
    """``int_0^inf r^(2m+1) exp(-gamma r^2) dr = m! / (2 gamma^(m+1))``."""
    return math.exp(gammaln(m + 1) - (m + 1) * math.log(gamma)) / 2


@dataclass(frozen=True)
class VortexTrial:
    m: int
    rho: float
    gamma: float

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise ValueError(f"m must be a non-negative integer, got {self.m}")
        if self.rho <= 0 or self.gamma <= 0:
            raise ValueError("rho and gamma must be positive")

    @property
    def log_c2(self) -> float:
        """``ln C^2`` with ``C^2 = rho gamma^(m+1) / (pi m!)``."""
        return (math.log(self.rho) + (self.m + 1) * math.log(self.gamma)
                - math.log(math.pi) - gammaln(self.m + 1))

    @property
    def c2(self) -> float:
        return math.exp(self.log_c2)

    def support_radius(self) -> float:
        """Radius beyond which ``|f|^2`` is below 1e-17 of its peak (roughly)."""
        s = self.m + 10 * math.sqrt(self.m + 1) + 40
        return math.sqrt(s / self.gamma)

    def field(self, grid: GridSpec) -> ComplexField:
        return vortex_field(self, grid)


def vortex_field(t: VortexTrial, g: GridSpec) -> ComplexField:
    x1, x2 = g.mesh()
    r2 = x1 * x1 + x2 * x2
    theta = np.arctan2(x2, x1)
    if t.m == 0:
        amp = np.exp(0.5 * t.log_c2 - 0.5 * t.gamma * r2)
    else:
        with np.errstate(divide="ignore"):
            amp = np.exp(0.5 * t.log_c2 + 0.5 * t.m * np.log(r2) - 0.5 * t.gamma * r2)
    return ComplexField(g, amp * np.exp(1j * t.m * theta))


@dataclass(frozen=True)
class VortexMoments:
    mass: float
    kinetic: float
    potential: float
    ang_mom: float
    l6: float
    l4: float
    log_moment: float


def vortex_l6(t: VortexTrial) -> float:
    """``||f_m||_6^6 = rho^3 gamma^2 (3m)! / (3 pi^2 3^(3m) (m!)^3)``."""
    m = t.m
    log_val = (3 * math.log(t.rho) + 2 * math.log(t.gamma) - 2 * math.log(math.pi)
               + gammaln(3 * m + 1) - (3 * m + 1) * math.log(3) - 3 * gammaln(m + 1))
    return math.exp(log_val)


def vortex_l4(t: VortexTrial) -> float:
    m = t.m
    log_val = (2 * math.log(t.rho) + math.log(t.gamma) - math.log(math.pi)
               + gammaln(2 * m + 1) - (2 * m + 1) * math.log(2) - 2 * gammaln(m + 1))
    return math.exp(log_val)


def vortex_log_moment(t: VortexTrial, plain: bool = False) -> float:
    """``int |f_m|^4 ln(|f_m|^2 / sqrt e)`` by 1D quadrature in ``s = gamma r^2``.

    The angular integral is exact (the density is radial); with
    ``|f|^2 = C^2 (s/gamma)^m e^{-s}`` the area element is ``pi ds / gamma``.
    """
    m, g = t.m, t.gamma
    log_c2 = t.log_c2
    shift = 0.0 if plain else 0.5

    def integrand(s):
        if s <= 0:
            return 0.0
        log_y = log_c2 + m * math.log(s / g) - s
        return math.exp(2 * log_y) * (log_y - shift)

    peak = float(m)
    width = 6 * math.sqrt(m + 1) + 20
    pts = [0.0, max(peak - width, 0.0), peak, peak + width, peak + 3 * width]
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b > a:
            val, _ = sint.quad(integrand, a, b, limit=200, epsabs=0.0, epsrel=1e-13)
            total += val
    return math.pi / g * total


def vortex_moments(t: VortexTrial, p: Params) -> VortexMoments:
    """Exact quadratic moments; ``p`` supplies ``gamma0`` and ``v0``.

    ``kinetic`` is ``||grad f||^2`` and ``potential`` is ``int V |f|^2`` with
    the trap frequency of ``p``.
    """
    m, rho, g = t.m, t.rho, t.gamma
    moment = rho * (m + 1) / g
    bump = (g / (g + p.gamma0)) ** (m + 1) * p.v0 * rho
    return VortexMoments(
        mass=rho,
        kinetic=rho * (m + 1) * g,
        potential=0.5 * p.gamma ** 2 * moment + bump,
        ang_mom=m * rho,
        l6=vortex_l6(t),
        l4=vortex_l4(t),
        log_moment=vortex_log_moment(t),
    )


@dataclass(frozen=True)
class VortexEnergy:
    m: int
    E_quadratic: float
    E_log: float
    L: float
    l6: float

    @property
    def E_total(self) -> float:
        return self.E_quadratic + self.E_log

    def csv_row(self) -> str:
        return f"{self.m},{self.E_quadratic!r},{self.E_log!r},{self.E_total!r},{self.L!r},{self.l6!r}"


def vortex_energy_curve(p: Params, m_max: int) -> list[VortexEnergy]:
    """Energies of the vortex family at mass ``p.rho`` and trap rate ``p.gamma``."""
    out = []
    for m in range(m_max + 1):
        t = VortexTrial(m, p.rho, p.gamma)
        vm = vortex_moments(t, p)
        quad = 0.5 * vm.kinetic + vm.potential - p.omega_rot * vm.ang_mom
        out.append(VortexEnergy(m, quad, 0.5 * vm.log_moment, vm.ang_mom, vm.l6))
    return out


# ----------------------------------------------------------------------------
# cubic ground state  -1/2 Q'' - Q'/(2r) + Q = Q^3


@dataclass(frozen=True)
class CubicGroundState:
    profile: RadialField
    l2_squared: float
    peak: float
    residual: float
    interpolant: object = None

    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        out = np.zeros_like(r)
        inside = r < self.profile.r_max
        out[inside] = self.interpolant(r[inside])
        return out

    @property
    def gn_constant(self) -> float:
        """Sharp constant of ``||f||_4^4 <= C ||grad f||^2 ||f||^2``."""
        return 1.0 / self.l2_squared


def _shoot(q0, r_end=12.0):
    """Integrate outward; +1 if Q crosses zero (too large), -1 if it turns up."""
    def rhs(r, y):
        q, dq = y
        return [dq, 2 * q - 2 * q ** 3 - dq / r]

    def crossed(r, y):
        return y[0]
    crossed.terminal = True

    def turned(r, y):
        return y[1]
    turned.terminal = True
    turned.direction = 1

    r0 = 1e-6
    c = q0 - q0 ** 3
    y0 = [q0 + c * r0 ** 2 / 2, c * r0]
    sol = sint.solve_ivp(rhs, (r0, r_end), y0, method="DOP853", rtol=1e-12, atol=1e-14,
                         events=(crossed, turned), dense_output=True)
    if sol.t_events[0].size:
        return 1, sol
    if sol.t_events[1].size:
        return -1, sol
    return 0, sol


def _cheb(n, half):
    """Chebyshev points on [-half, half] and differentiation matrix."""
    k = np.arange(n + 1)
    x = np.cos(np.pi * k / n)
    c = np.where((k == 0) | (k == n), 2.0, 1.0) * (-1.0) ** k
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    d -= np.diag(d.sum(axis=1))
    return half * x, d / half


@functools.lru_cache(maxsize=None)
def cubic_ground_state(tol: float = 1e-11, r_max: float = 18.0, n_cheb: int = 720,
                       m_profile: int = 4096) -> CubicGroundState:
    """Positive radial solution of ``-1/2 Delta Q + Q = Q^3``.

    Bisection on ``Q(0)`` by shooting gives the starting profile; Newton's
    method on an even Chebyshev collocation of ``[-r_max, r_max]`` then drives
    the residual below ``tol``.
    """
    if not (1e-14 < tol < 1e-6):
        raise ValueError("tol must lie in (1e-14, 1e-6)")
    lo, hi = 1.5, 3.0
    if _shoot(lo)[0] != -1 or _shoot(hi)[0] != 1:
        raise RuntimeError(f"shooting bracket [{lo}, {hi}] does not enclose Q(0)")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        flag, sol = _shoot(mid)
        if flag == 1:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-12:
            break
    flag, sol = _shoot(lo)
    r_stop = sol.t[-1]

    x, d1 = _cheb(n_cheb, r_max)
    d2 = d1 @ d1
    r = np.abs(x)
    q = np.zeros_like(x)
    inside = r < r_stop
    q[inside] = np.clip(sol.sol(np.maximum(r[inside], 1e-6))[0], 0.0, None)
    # with n_cheb even the node x = 0 is present; there Q'/r is replaced by its limit Q''
    zero = np.isclose(x, 0.0)
    inv_r = np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, x))
    lap = d2 + inv_r[:, None] * d1
    lap[zero] = 2 * d2[zero]
    interior = slice(1, n_cheb)
    residual = np.inf
    for _ in range(50):
        f = -0.5 * (lap @ q) + q - q ** 3
        residual = float(np.max(np.abs(f[interior])))
        if residual < tol:
            break
        jac = -0.5 * lap + np.diag(1 - 3 * q ** 2)
        dq = np.zeros_like(q)
        dq[interior] = np.linalg.solve(jac[interior, interior], -f[interior])
        q = q + dq
    if residual >= tol:
        raise RuntimeError(f"Newton polish stalled at residual {residual:.2e}")

    interp = BarycentricInterpolator(x, q)
    l2, _ = sint.quad(lambda s: 2 * np.pi * s * float(interp(s)) ** 2, 0, r_max,
                      limit=400, epsabs=0, epsrel=1e-13, points=[2, 5, 10])
    h = r_max / m_profile
    rr = (np.arange(m_profile) + 0.5) * h
    profile = RadialField(r_max, interp(rr))
    return CubicGroundState(profile=profile, l2_squared=float(l2),
                            peak=float(interp(0.0)), residual=residual, interpolant=interp)


# ----------------------------------------------------------------------------
# magnetic translation counterexample


@dataclass(frozen=True)
class CounterexampleValues:
    lhs: float
    rhs: float
    lhs_exact: float
    rhs_exact: float
    plain_kinetic: float


def modulus_magnetic_counterexample(gamma: float, y_shift, grid: GridSpec | None = None) -> CounterexampleValues:
    """Compare ``||grad_A z||^2`` and ``||grad_A |z| ||^2`` for a magnetic translate.

    ``z(x) = exp(-i A(y).x) phi(x + y)`` with ``phi = exp(-|x|^2)``; ``z`` has the
    same magnetic energy as ``phi`` while ``|z|`` is an ordinary translate.
    """
    from .functionals import kinetic, magnetic_kinetic, moment

    if gamma <= 0:
        raise ValueError("gamma must be positive")
    y = np.atleast_1d(np.asarray(y_shift, dtype=float))
    if y.size == 1:
        y = np.array([y[0], 0.0])
    ynorm2 = float(y @ y)
    if grid is None:
        half = max(8.0, 2.0 * math.sqrt(ynorm2) + 8.0)
        need = (gamma * math.sqrt(ynorm2) + 12.0) * 2 * half / math.pi
        n = 64
        while n < need:
            n *= 2
        grid = GridSpec(half, n)
    x1, x2 = grid.mesh()
    a_dot_x = gamma * (-y[1] * x1 + y[0] * x2)
    phi_shift = np.exp(-((x1 + y[0]) ** 2 + (x2 + y[1]) ** 2))
    z = ComplexField(grid, np.exp(-1j * a_dot_x) * phi_shift)
    mod = ComplexField(grid, phi_shift.astype(complex))
    lhs = magnetic_kinetic(z, gamma)
    rhs = kinetic(mod) + gamma ** 2 * moment(mod)
    return CounterexampleValues(
        lhs=lhs, rhs=rhs,
        lhs_exact=math.pi * (1 + gamma ** 2 / 4),
        rhs_exact=math.pi + gamma ** 2 * math.pi * (0.25 + ynorm2 / 2),
        plain_kinetic=kinetic(z),
    )


__all__ = [
    "GaussianTrial", "GaussianMoments", "gaussian_moments", "gaussian_magnetic_energy",
    "Thresholds", "threshold_functions", "witness_G", "witness_F", "witness_H", "critical_witness",
    "radial_gamma_integral", "VortexTrial", "vortex_field", "VortexMoments", "vortex_moments",
    "vortex_l6", "vortex_l4", "vortex_log_moment", "VortexEnergy", "vortex_energy_curve",
    "CubicGroundState", "cubic_ground_state", "CounterexampleValues",
    "modulus_magnetic_counterexample", "TRIAL_SWEEP_HEADER", "SQRT_E",
]
