import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sint
from scipy.special import gammaln

from rotgpe import functionals as fn
from rotgpe import trials as tr
from rotgpe.functionals import Params
from rotgpe.grid import GridSpec

from conftest import rand_field


def radial_oracle(m, rho, gamma, power, weight=lambda r: 1.0):
    """``2 pi int (C^2 r^2m e^{-gamma r^2})^power weight(r) r dr`` by adaptive quadrature."""
    log_c2 = math.log(rho) + (m + 1) * math.log(gamma) - math.log(math.pi) - gammaln(m + 1)

    def integrand(r):
        if r == 0.0:
            return 0.0 if m > 0 else math.exp(power * log_c2) * weight(r) * r
        log_y = log_c2 + 2 * m * math.log(r) - gamma * r * r
        return math.exp(power * log_y) * weight(r) * r

    peak = math.sqrt(m / gamma) if m else 0.0
    hi = peak + 30 / math.sqrt(gamma)
    val, _ = sint.quad(integrand, 0.0, hi, points=[peak] if m else None, limit=400,
                       epsabs=0.0, epsrel=1e-12)
    return 2 * math.pi * val


# -- vortex family ------------------------------------------------------------------


@pytest.mark.parametrize("m", [0, 1, 3, 8, 20])
@pytest.mark.parametrize("gamma", [0.5, 1.0])
def test_vortex_moments_against_quadrature(m, gamma):
    rho = 2.5
    t = tr.VortexTrial(m, rho, gamma)
    p = Params(gamma=gamma, gamma0=gamma, v0=0.3)
    vm = tr.vortex_moments(t, p)
    assert vm.mass == pytest.approx(radial_oracle(m, rho, gamma, 1), rel=1e-10)
    assert vm.l4 == pytest.approx(radial_oracle(m, rho, gamma, 2), rel=1e-9)
    assert vm.l6 == pytest.approx(radial_oracle(m, rho, gamma, 3), rel=1e-9)
    pot = radial_oracle(m, rho, gamma, 1, lambda r: 0.5 * gamma ** 2 * r * r + 0.3 * math.exp(-gamma * r * r))
    assert vm.potential == pytest.approx(pot, rel=1e-9)
    assert vm.ang_mom == m * rho


def test_vortex_l6_first_values():
    # m = 1 value from the closed form (3m)!/(3^(3m+1) (m!)^3) = 2/27
    t = tr.VortexTrial(1, 1.0, 1.0)
    assert tr.vortex_l6(t) == pytest.approx(2 / 27 / math.pi ** 2, rel=1e-14)
    assert tr.vortex_l6(tr.VortexTrial(0, 1.0, 1.0)) == pytest.approx(1 / (3 * math.pi ** 2), rel=1e-14)


@pytest.mark.parametrize("m", [0, 2, 6])
def test_vortex_log_moment_against_grid(m):
    t = tr.VortexTrial(m, 1.5, 1.0)
    f = t.field(GridSpec(10.0, 256))
    assert tr.vortex_log_moment(t) == pytest.approx(fn.log_moment(f), rel=1e-8)
    assert tr.vortex_log_moment(t, plain=True) == pytest.approx(fn.log_moment_plain(f), rel=1e-8)


def test_vortex_field_moments_on_grid():
    t = tr.VortexTrial(4, 2.0, 1.0)
    f = t.field(GridSpec(10.0, 256))
    assert fn.mass(f) == pytest.approx(2.0, rel=1e-10)
    assert fn.kinetic(f) == pytest.approx(2.0 * 5, rel=1e-9)
    assert fn.angular_momentum(f) == pytest.approx(8.0, rel=1e-9)
    assert t.support_radius() < 10.0


def test_vortex_rejects_bad_args():
    for args in [(-1, 1.0, 1.0), (1, 0.0, 1.0), (1, 1.0, 0.0)]:
        with pytest.raises(ValueError):
            tr.VortexTrial(*args)


@given(st.floats(0.1, 3.0), st.integers(0, 30))
def test_radial_gamma_integral(gamma, m):
    val, _ = sint.quad(lambda r: r ** (2 * m + 1) * math.exp(-gamma * r * r), 0, np.inf, epsrel=1e-12)
    assert tr.radial_gamma_integral(gamma, m) == pytest.approx(val, rel=1e-9)


def test_energy_curve_differences_tend_to_rotation_excess():
    p = Params(gamma=1.0, gamma0=1.0, omega_rot=2.0, rho=1.0)
    e = np.array([row.E_total for row in tr.vortex_energy_curve(p, 20)])
    assert np.all(np.diff(e[5:]) < 0)
    assert np.diff(e)[-1] == pytest.approx(-1.0, rel=0.05)


def test_trial_sweep_csv_row():
    row = tr.vortex_energy_curve(Params(gamma=1.0), 1)[1]
    cells = row.csv_row().split(",")
    assert len(cells) == len(tr.TRIAL_SWEEP_HEADER.split(","))
    assert float(cells[3]) == pytest.approx(row.E_total)


# -- thresholds and the critical witness ------------------------------------------------


def test_threshold_values():
    th = tr.threshold_functions(1.0)
    assert th.b0 == pytest.approx(math.exp(-1.5) / 2)
    assert th.gamma_critical == pytest.approx(1 / (2 * math.exp(1.5)))
    below = tr.threshold_functions(0.9 * th.gamma_critical).H_at_b0
    above = tr.threshold_functions(1.1 * th.gamma_critical).H_at_b0
    assert below < 0 < above
    with pytest.raises(ValueError):
        tr.threshold_functions(0.0)


@given(st.floats(0.01, 0.4), st.floats(0.01, 1.0))
def test_G_at_twice_b_is_H(b, gamma):
    assert tr.witness_G(2 * b, b, gamma) == pytest.approx(tr.witness_H(b, gamma), rel=1e-12, abs=1e-14)


def test_G_decreasing_up_to_twice_b0():
    b0 = tr.threshold_functions(0.1).b0
    theta = np.linspace(1e-4, 2 * b0, 2001)
    assert np.all(np.diff(tr.witness_G(theta, b0, 0.1)) < 0)


def test_critical_witness_energy():
    gamma = 0.1
    t, e = tr.critical_witness(gamma)
    b0 = tr.threshold_functions(gamma).b0
    # closed form: (pi / 4 b0)(gamma^2 - b0^2)
    assert e == pytest.approx(math.pi / (4 * b0) * (gamma ** 2 - b0 ** 2), rel=1e-12)
    assert e < 0
    f = t.field(GridSpec(24.0, 256))
    p = Params(gamma=gamma, omega_rot=gamma)
    assert fn.energy_magnetic(f, p) == pytest.approx(e, rel=1e-9)
    assert fn.mass(f) == pytest.approx(math.pi, rel=1e-10)


def test_gaussian_moments_critical_energy():
    t = tr.GaussianTrial(0.8, 0.3)
    gm = tr.gaussian_moments(t, Params(gamma=0.4))
    e = 0.5 * gm.magnetic_kinetic + 0.5 * gm.log_moment
    assert tr.gaussian_magnetic_energy(t, 0.4) == pytest.approx(e, rel=1e-12)


# -- cubic ground state -----------------------------------------------------------------------


def _shoot_sign(q0):
    def rhs(r, y):
        return [y[1], 2 * y[0] - 2 * y[0] ** 3 - y[1] / r]

    def hit(r, y):
        return y[0]
    hit.terminal = True

    def turn(r, y):
        return y[1]
    turn.terminal, turn.direction = True, 1
    r0 = 1e-8
    sol = sint.solve_ivp(rhs, (r0, 15.0), [q0, 0.0], method="LSODA", rtol=1e-12, atol=1e-14,
                         events=[hit, turn])
    return 1 if sol.t_events[0].size else -1


def test_cubic_ground_state_peak_against_shooting():
    lo, hi = 2.0, 2.5
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if _shoot_sign(mid) > 0:
            hi = mid
        else:
            lo = mid
    q = tr.cubic_ground_state()
    assert q.peak == pytest.approx(0.5 * (lo + hi), abs=1e-6)
    assert q.peak == pytest.approx(2.2062008646507, abs=1e-9)


def test_cubic_ground_state_profile():
    q = tr.cubic_ground_state()
    assert q.residual < 1e-10
    assert q.l2_squared == pytest.approx(5.8504482623, rel=1e-9)
    r = np.linspace(0, 10, 400)
    vals = q(r)
    assert np.all(vals > 0) and np.all(np.diff(vals) < 0)
    # equation -Q''/2 - Q'/(2r) + Q = Q^3 checked with finite differences
    h = 1e-3
    rr = np.linspace(0.5, 6.0, 50)
    d2 = (q(rr + h) - 2 * q(rr) + q(rr - h)) / h ** 2
    d1 = (q(rr + h) - q(rr - h)) / (2 * h)
    res = -0.5 * d2 - 0.5 * d1 / rr + q(rr) - q(rr) ** 3
    assert np.max(np.abs(res)) < 1e-5
    assert q.gn_constant == pytest.approx(1 / q.l2_squared)


@given(st.integers(0, 2 ** 20))
def test_gn_inequality_with_sharp_constant(seed):
    f = rand_field(seed, GridSpec(10.0, 128), width=0.9)
    c4 = tr.cubic_ground_state().gn_constant
    assert fn.lp_norm_p(f, 4) <= c4 * fn.kinetic(f) * fn.mass(f)


def test_gn_attained_by_Q():
    q = tr.cubic_ground_state()
    f = q.profile.lift(GridSpec(16.0, 256))
    ratio = fn.lp_norm_p(f, 4) / (fn.kinetic(f) * fn.mass(f))
    assert ratio == pytest.approx(q.gn_constant, rel=1e-6)


# -- magnetic translation counterexample ----------------------------------------------------


def test_counterexample_at_distance_ten():
    ce = tr.modulus_magnetic_counterexample(1.0, 10.0)
    assert ce.lhs == pytest.approx(ce.lhs_exact, rel=1e-9)
    assert ce.rhs == pytest.approx(ce.rhs_exact, rel=1e-9)
    assert ce.rhs > ce.lhs


def test_counterexample_without_shift_is_tight():
    ce = tr.modulus_magnetic_counterexample(1.0, 0.0)
    assert ce.rhs == pytest.approx(ce.lhs, rel=1e-10)


@given(st.floats(0.2, 2.0), st.floats(-4.0, 4.0), st.floats(-4.0, 4.0))
def test_counterexample_closed_forms(gamma, y1, y2):
    ce = tr.modulus_magnetic_counterexample(gamma, [y1, y2])
    assert ce.lhs == pytest.approx(ce.lhs_exact, rel=1e-8)
    assert ce.rhs == pytest.approx(ce.rhs_exact, rel=1e-8)
