"""Scalar functionals of a field: conserved quantities, energies, action/Nehari
pair, Pohozaev residuals and a battery of functional inequalities."""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.optimize import minimize_scalar

from .grid import ComplexField, GridSpec, apply_grad_A, gradient, integrate, modulus_gradient_fd

SQRT_E = math.sqrt(math.e)


class Regime(enum.Enum):
    SUB = "sub"
    CRITICAL = "critical"
    SUPER = "super"


@dataclass(frozen=True)
class Params:
    """Physical constants of the model plus the mass target.

    ``V(x) = gamma^2 |x|^2 / 2 + v0 exp(-gamma0 |x|^2)``; ``omega_rot`` is the
    rotation speed and ``k3`` the three-body loss rate.
    """

    gamma: float = 1.0
    gamma0: float = 1.0
    v0: float = 0.0
    omega_rot: float = 0.0
    k3: float = 0.0
    rho: float = 1.0
    test_mode: bool = False

    def __post_init__(self):
        for f in fields(self):
            if f.name == "test_mode":
                continue
            value = getattr(self, f.name)
            if not np.isfinite(value):
                raise ValueError(f"{f.name} must be finite, got {value}")
        if self.gamma < 0 or (self.gamma == 0 and not self.test_mode):
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.gamma0 <= 0:
            raise ValueError(f"gamma0 must be > 0, got {self.gamma0}")
        if self.v0 < 0:
            raise ValueError(f"v0 must be >= 0, got {self.v0}")
        if self.omega_rot < 0:
            raise ValueError(f"omega_rot must be >= 0, got {self.omega_rot}")
        if self.k3 < 0:
            raise ValueError(f"k3 must be >= 0, got {self.k3}")
        if self.rho <= 0:
            raise ValueError(f"rho must be > 0, got {self.rho}")

    @property
    def regime(self) -> Regime:
        # exact comparison on purpose: the critical case is built by assignment
        if self.omega_rot < self.gamma:
            return Regime.SUB
        if self.omega_rot == self.gamma:
            return Regime.CRITICAL
        return Regime.SUPER

    def replace(self, **changes) -> "Params":
        d = asdict(self)
        d.update(changes)
        return Params(**d)

    def potential(self, r2):
        return 0.5 * self.gamma ** 2 * r2 + self.v0 * np.exp(-self.gamma0 * r2)

    def x_grad_potential(self, r2):
        """``x . grad V`` for the radial trap."""
        return self.gamma ** 2 * r2 - 2.0 * self.v0 * self.gamma0 * r2 * np.exp(-self.gamma0 * r2)


OBSERVABLE_HEADER = "t,mass,ang_mom,energy,l4,l6,moment,kinetic"


@dataclass(frozen=True)
class ObservableRecord:
    t: float
    mass: float
    ang_mom: float
    energy: float
    l4: float
    l6: float
    moment: float
    kinetic: float

    def csv_row(self) -> str:
        return ",".join(repr(float(getattr(self, f.name))) for f in fields(self))


@dataclass(frozen=True)
class PohozaevReport:
    r1: float
    r2: float
    r3: float
    raw: tuple = ()

    @property
    def max(self) -> float:
        return max(self.r1, self.r2, self.r3)


# ----------------------------------------------------------------------------
# pointwise densities


def _y_ln_y(y):
    # y ln y with the 0 ln 0 = 0 convention
    safe = np.where(y > 0, y, 1.0)
    return np.where(y > 0, y * np.log(safe), 0.0)


def log_density(values):
    """``|f|^4 ln(|f|^2 / sqrt(e))``."""
    y = values.real ** 2 + values.imag ** 2
    return y * (_y_ln_y(y) - 0.5 * y)


def log_density_plain(values):
    """``|f|^4 ln |f|^2``."""
    y = values.real ** 2 + values.imag ** 2
    return y * _y_ln_y(y)


def _abs2(x1, x2, v):
    return v.real ** 2 + v.imag ** 2


# ----------------------------------------------------------------------------
# basic moments


def mass(f: ComplexField) -> float:
    return integrate(f, _abs2)


def kinetic(f: ComplexField) -> float:
    """``||grad f||^2``."""
    d1, d2 = gradient(f)
    return integrate(d1, _abs2) + integrate(d2, _abs2)


def magnetic_kinetic(f: ComplexField, gamma: float) -> float:
    """``||grad_A f||^2``."""
    d1, d2 = apply_grad_A(f, gamma)
    return integrate(d1, _abs2) + integrate(d2, _abs2)


def moment(f: ComplexField) -> float:
    """``||x f||^2``."""
    return integrate(f, lambda x1, x2, v: (x1 * x1 + x2 * x2) * _abs2(x1, x2, v))


def lp_norm_p(f: ComplexField, p: int) -> float:
    """``||f||_{L^p}^p`` for even ``p``."""
    return integrate(f, lambda x1, x2, v: _abs2(x1, x2, v) ** (p // 2))


def potential_energy(f: ComplexField, p: Params) -> float:
    """``int V |f|^2``."""
    return integrate(f, lambda x1, x2, v: p.potential(x1 * x1 + x2 * x2) * _abs2(x1, x2, v))


def log_moment(f: ComplexField) -> float:
    """``int |f|^4 ln(|f|^2 / sqrt(e))``."""
    return integrate(f, lambda x1, x2, v: log_density(v))


def log_moment_plain(f: ComplexField) -> float:
    """``int |f|^4 ln |f|^2``."""
    return integrate(f, lambda x1, x2, v: log_density_plain(v))


def _lz_inner(f: ComplexField, d1, d2) -> complex:
    x1, x2 = f.grid.mesh()
    lz = 1j * (x2 * d1 - x1 * d2)
    return complex(np.sum(np.conj(f.values) * lz) * f.grid.cell_area)


def angular_momentum(f: ComplexField) -> float:
    """``L(f) = int conj(f) L_z f``; the imaginary part must vanish."""
    d1, d2 = gradient(f)
    val = _lz_inner(f, d1.values, d2.values)
    m = mass(f)
    if abs(val.imag) > 1e-9 * max(m, 1e-300) and abs(val.imag) > 1e-14:
        raise ValueError(f"angular momentum has imaginary part {val.imag:.3e} "
                         f"(mass {m:.3e}); field is corrupted")
    return val.real


# ----------------------------------------------------------------------------
# energies


def energy(f: ComplexField, p: Params) -> float:
    """``E(f) = 1/2 ||grad f||^2 + int V|f|^2 + 1/2 int |f|^4 ln(|f|^2/sqrt e) - Omega L(f)``."""
    e = 0.5 * kinetic(f) + potential_energy(f, p) + 0.5 * log_moment(f)
    if p.omega_rot != 0:
        e -= p.omega_rot * angular_momentum(f)
    return e


def energy_rotation_free(f: ComplexField, p: Params) -> float:
    return energy(f, p.replace(omega_rot=0.0))


def energy_magnetic(f: ComplexField, p: Params) -> float:
    """Critical-rotation energy written with the magnetic gradient."""
    if p.regime is not Regime.CRITICAL:
        raise ValueError(f"energy_magnetic needs omega_rot == gamma, regime is {p.regime.value}")
    gauss = integrate(f, lambda x1, x2, v: p.v0 * np.exp(-p.gamma0 * (x1 * x1 + x2 * x2)) * _abs2(x1, x2, v))
    return 0.5 * magnetic_kinetic(f, p.gamma) + gauss + 0.5 * log_moment(f)


def quadratic_form_B(f: ComplexField, p: Params) -> float:
    return kinetic(f) + 2.0 * potential_energy(f, p) - 2.0 * p.omega_rot * angular_momentum(f)


def action_S(f: ComplexField, p: Params, omega: float) -> float:
    return (0.5 * kinetic(f) + omega * mass(f) + potential_energy(f, p)
            + 0.5 * log_moment(f))


def nehari_K(f: ComplexField, p: Params, omega: float) -> float:
    return (kinetic(f) + 2.0 * omega * mass(f) + 2.0 * potential_energy(f, p)
            + 2.0 * log_moment_plain(f))


def pseudo_energy(f: ComplexField, p: Params, k: float) -> float:
    """Rotation-free energy plus ``k ||f||_6^6``."""
    if k <= 0:
        raise ValueError("k must be > 0")
    return energy_rotation_free(f, p) + k * lp_norm_p(f, 6)


def observables(f: ComplexField, p: Params, t: float = 0.0) -> ObservableRecord:
    """All logged quantities in one pass (two transforms)."""
    d1, d2 = gradient(f)
    area = f.grid.cell_area
    y = f.abs2
    r2 = f.grid.r2()
    kin = float(np.sum(d1.abs2 + d2.abs2) * area)
    m = float(np.sum(y) * area)
    lz = _lz_inner(f, d1.values, d2.values).real
    pot = float(np.sum(p.potential(r2) * y) * area)
    logm = float(np.sum(log_density(f.values)) * area)
    e = 0.5 * kin + pot + 0.5 * logm - p.omega_rot * lz
    return ObservableRecord(
        t=float(t), mass=m, ang_mom=lz, energy=e,
        l4=float(np.sum(y * y) * area), l6=float(np.sum(y ** 3) * area),
        moment=float(np.sum(r2 * y) * area), kinetic=kin,
    )


# ----------------------------------------------------------------------------
# Pohozaev identities and admissibility


def pohozaev_terms(phi: ComplexField, p: Params, omega: float):
    """Signed terms of the three identities (each should sum to zero)."""
    kin = kinetic(phi)
    m = mass(phi)
    pot = potential_energy(phi, p)
    xgv = integrate(phi, lambda x1, x2, v: p.x_grad_potential(x1 * x1 + x2 * x2) * _abs2(x1, x2, v))
    ln_plain = log_moment_plain(phi)
    ln_shift = log_moment(phi)
    l4 = lp_norm_p(phi, 4)
    t1 = (0.5 * kin, omega * m, pot, ln_plain)
    t2 = (omega * m, pot, 0.5 * xgv, 0.5 * ln_shift)
    t3 = (0.5 * kin, 0.5 * l4, -omega * m, -pot, -xgv)
    return t1, t2, t3


def _normalized(terms):
    total = sum(terms)
    scale = sum(abs(t) for t in terms)
    return 0.0 if scale == 0 else abs(total) / scale


def pohozaev_residuals(phi: ComplexField, p: Params, omega: float) -> PohozaevReport:
    t1, t2, t3 = pohozaev_terms(phi, p, omega)
    return PohozaevReport(_normalized(t1), _normalized(t2), _normalized(t3),
                          raw=(sum(t1), sum(t2), sum(t3)))


class Verdict(enum.Enum):
    MUST_BE_TRIVIAL = "MustBeTrivial"
    ADMISSIBLE = "Admissible"


def nonexistence_thresholds(v0: float):
    """``(1/(2 sqrt e) + v0/e^2, 1/e)``."""
    return 1.0 / (2.0 * SQRT_E) + v0 / math.e ** 2, 1.0 / math.e


def check_nonexistence_window(omega: float, omega_V0: float, p: Params) -> Verdict:
    if omega_V0 < p.gamma * (1 - 1e-9):
        raise ValueError(f"omega_V0 = {omega_V0} is below gamma = {p.gamma}")
    first, second = nonexistence_thresholds(p.v0)
    if omega >= first or omega + omega_V0 > second:
        return Verdict.MUST_BE_TRIVIAL
    return Verdict.ADMISSIBLE


def dichotomy_constants(rho: float, a: float, c4: float):
    if not (0 < a < rho):
        raise ValueError(f"need 0 < a < rho, got a={a}, rho={rho}")
    if c4 <= 0:
        raise ValueError("c4 must be positive")

    def k(split):
        x = rho / split
        return (x - 1.0) / (c4 * rho) - math.log(x)

    return k(a), k(rho - a)


# ----------------------------------------------------------------------------
# inequalities


@functools.lru_cache(maxsize=None)
def est_log_constant() -> float:
    """Smallest C with ``y^2 |ln(y/sqrt e)| <= C (y^1.5 + y^2.5)`` for y > 0."""

    def neg_ratio(s):
        y = math.exp(s)
        return -(y * y * abs(math.log(y) - 0.5)) / (y ** 1.5 + y ** 2.5)

    best = 0.0
    # the ratio vanishes at y = sqrt(e); search on either side of that zero
    for lo, hi in ((-30.0, 0.5), (0.5, 30.0)):
        res = minimize_scalar(neg_ratio, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        best = max(best, -res.fun)
    return best


@dataclass(frozen=True)
class InequalityCheck:
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


@dataclass(frozen=True)
class InequalityReport:
    checks: dict

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.checks.values())

    def __getitem__(self, name) -> InequalityCheck:
        return self.checks[name]


def inequality_suite(f: ComplexField, p: Params, c4: float | None = None,
                     diamagnetic_slack: float = 0.0) -> InequalityReport:
    """Evaluate the functional inequalities on ``f``.

    ``c4`` defaults to the sharp constant ``1/||Q||^2``.  ``diamagnetic_slack``
    absorbs the finite-difference error of ``grad |f|`` (relative).
    """
    if c4 is None:
        from .trials import cubic_ground_state

        c4 = 1.0 / cubic_ground_state().l2_squared
    m = mass(f)
    kin = kinetic(f)
    mom = moment(f)
    mag = magnetic_kinetic(f, p.gamma)
    l4 = lp_norm_p(f, 4)
    g1, g2 = modulus_gradient_fd(f)
    mod_kin = float(np.sum(g1 * g1 + g2 * g2) * f.grid.cell_area)
    y = f.abs2
    area = f.grid.cell_area
    neg_log = 0.5 * float(np.sum(np.where(y < SQRT_E, -log_density(f.values), 0.0)) * area)
    abs_log = float(np.sum(np.abs(log_density(f.values))) * area)
    l3 = float(np.sum(y ** 1.5) * area)
    l5 = float(np.sum(y ** 2.5) * area)
    checks = {
        "uncertainty": InequalityCheck(m, math.sqrt(kin * mom)),
        "diamagnetic": InequalityCheck(math.sqrt(mod_kin), math.sqrt(mag) * (1 + diamagnetic_slack)),
        "magnetic_gn4": InequalityCheck(l4, c4 * mag * m),
        "trap_bound": InequalityCheck(m, (0.5 * kin + potential_energy(f, p)) / p.gamma),
        "negative_log": InequalityCheck(neg_log, 0.5 * SQRT_E * m),
        "est_log": InequalityCheck(abs_log, est_log_constant() * (l3 + l5)),
    }
    return InequalityReport(checks)
