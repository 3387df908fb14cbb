import math

import numpy as np
import pytest

from rotgpe import functionals as fn
from rotgpe.functionals import Params
from rotgpe.grid import ComplexField, GridSpec
from rotgpe.minimize import (
    FlowConfig,
    NonexistenceRegime,
    Seed,
    constant_phase_check,
    extract_omega,
    field_norm,
    ground_state,
    ground_state_magnetic,
    ground_state_radial,
    linear_bottom,
    orbit_distance,
    seed_field,
    stability_probe,
    stationarity_residual,
)
from rotgpe.trials import VortexTrial

from conftest import rand_field

SMALL = GridSpec(8.0, 64)


@pytest.fixture(scope="module")
def sub_ground():
    return ground_state(Params(gamma=1.0, rho=1.0), FlowConfig(tol_residual=1e-8), SMALL)


def test_seed_parse():
    assert Seed.parse("gaussian:0.25") == Seed("gaussian", 0.25)
    assert Seed.parse("vortex:3") == Seed("vortex", 3)
    assert str(Seed.parse("random:7")) == "random:7"
    for bad in ["gaussian", "spiral:2", "vortex:x"]:
        with pytest.raises(ValueError):
            Seed.parse(bad)


@pytest.mark.parametrize("kw", [dict(tau=0.0), dict(tol_energy=0.0), dict(tol_residual=0.5),
                                dict(max_iter=0)])
def test_flow_config_rejects(kw):
    with pytest.raises(ValueError):
        FlowConfig(**kw)


@pytest.mark.parametrize("kind", ["gaussian:0.4", "vortex:2", "random:5"])
def test_seeds_have_target_mass(kind):
    p = Params(gamma=1.0, rho=2.5)
    f = seed_field(Seed.parse(kind), SMALL, p)
    assert fn.mass(f) == pytest.approx(2.5, rel=1e-12)


def test_refusals():
    with pytest.raises(NonexistenceRegime):
        ground_state(Params(gamma=1.0, omega_rot=1.5))
    with pytest.raises(ValueError):
        ground_state(Params(gamma=1.0, omega_rot=1.0))
    with pytest.raises(ValueError):
        ground_state_magnetic(Params(gamma=1.0, omega_rot=0.5))
    with pytest.raises(ValueError):
        ground_state_magnetic(Params(gamma=1.0, omega_rot=1.0, v0=0.2))


def test_ground_state_properties(sub_ground):
    p = Params(gamma=1.0, rho=1.0)
    gs = sub_ground
    assert gs.converged and gs.residual < 1e-8
    assert fn.mass(gs.state) == pytest.approx(1.0, rel=1e-12)
    e = np.array(gs.energies)
    assert np.all(np.diff(e) <= 1e-12 * np.abs(e[:-1]))
    assert gs.energy == pytest.approx(fn.energy(gs.state, p), rel=1e-10)
    assert gs.omega == pytest.approx(extract_omega(gs.state, p), rel=1e-7)
    assert stationarity_residual(gs.state, p, gs.omega) < 1e-7
    assert fn.pohozaev_residuals(gs.state, p, gs.omega).max < 1e-6


def test_ground_state_beats_trial_states(sub_ground):
    p = Params(gamma=1.0, rho=1.0)
    for kind in ["gaussian:0.3", "gaussian:0.8", "random:3"]:
        f = seed_field(Seed.parse(kind), SMALL, p)
        assert sub_ground.energy <= fn.energy(f, p)


def test_ground_state_seed_independent(sub_ground):
    p = Params(gamma=1.0, rho=1.0)
    other = ground_state(p, FlowConfig(tol_residual=1e-8, seed_kind=Seed("random", 2)), SMALL)
    assert other.energy == pytest.approx(sub_ground.energy, rel=1e-9)
    assert orbit_distance(other.state, sub_ground.state) < 1e-5


def test_ground_state_phase_check(sub_ground):
    chk = constant_phase_check(sub_ground.state)
    assert chk.positive and chk.passes


def test_phase_check_rejects_vortex_and_twisted_phase():
    v = VortexTrial(1, 1.0, 1.0).field(GridSpec(8.0, 64))
    assert not constant_phase_check(v).passes
    x1, _ = SMALL.mesh()
    g = SMALL.sample(lambda a, b: np.exp(-0.5 * (a * a + b * b)))
    twisted = g.with_values(g.values * np.exp(0.3j * x1))
    assert not constant_phase_check(twisted).passes


def test_linear_bottom_is_trap_frequency():
    lb = linear_bottom(Params(gamma=0.7), GridSpec(10.0, 64))
    assert lb.omega_V0 == pytest.approx(0.7, rel=1e-9)
    x1, x2 = lb.eigenfunction.grid.mesh()
    gauss = np.exp(-0.35 * (x1 * x1 + x2 * x2))
    ratio = np.abs(lb.eigenfunction.values) / gauss
    assert np.ptp(ratio[np.abs(x1) + np.abs(x2) < 3]) < 1e-6 * ratio.max()


def test_linear_bottom_with_bump_in_window():
    g, g0, v0 = 1.0, 1.0, 0.2
    lb = linear_bottom(Params(gamma=g, gamma0=g0, v0=v0), GridSpec(8.0, 64))
    assert g < lb.omega_V0 <= g + g * v0 / (g + g0)


def test_magnetic_solver_matches_radial_solver():
    p = Params(gamma=0.5, omega_rot=0.5, rho=1.0)
    mag = ground_state_magnetic(p, FlowConfig(tol_residual=1e-8), GridSpec(12.0, 64))
    rad = ground_state_radial(p, FlowConfig(tol_residual=1e-8), r_max=14.0, m=1400)
    assert mag.converged and rad.converged
    assert mag.energy == pytest.approx(rad.energy, abs=1e-5)


def test_radial_solver_mass_and_monotone_energy():
    p = Params(gamma=1.0, omega_rot=1.0, v0=0.2, rho=1.0)
    rad = ground_state_radial(p, FlowConfig(tol_residual=1e-8), r_max=10.0, m=1000)
    assert rad.converged
    assert rad.state.integrate(lambda r, v: v * v) == pytest.approx(1.0, rel=1e-12)
    e = np.array(rad.energies)
    assert np.all(np.diff(e) <= 1e-12 * np.abs(e[:-1]))
    assert np.all(rad.state.values > 0)


def test_orbit_distance_is_phase_invariant():
    f = rand_field(1, SMALL, width=0.8)
    assert orbit_distance(f * np.exp(1.234j), f) < 1e-12 * field_norm(f)
    g = rand_field(2, SMALL, width=0.8)
    assert orbit_distance(g, f) <= field_norm(g - f) + 1e-12
    assert orbit_distance(g, f, "h1a", gamma=0.5) > 0
    with pytest.raises(ValueError):
        orbit_distance(g, f, "h1a")
    with pytest.raises(ValueError):
        orbit_distance(g, rand_field(2, GridSpec(8.0, 128)))


def test_stability_probe_floor(sub_ground, quiet):
    # delta = 0 with Omega = 0: the distance stays at the splitting error floor
    p = Params(gamma=1.0, rho=1.0)
    rep = stability_probe(p, FlowConfig(), 0.0, 1.0, SMALL, dt=1e-3, log_every=100, ground=sub_ground)
    assert rep.initial_distance < 1e-12
    assert rep.sup_orbit_distance < 1e-6


def test_stability_probe_rejects_loss_and_super():
    with pytest.raises(ValueError):
        stability_probe(Params(gamma=1.0, k3=0.1), FlowConfig(), 1e-3, 1.0, SMALL)
    with pytest.raises(NonexistenceRegime):
        stability_probe(Params(gamma=1.0, omega_rot=2.0), FlowConfig(), 1e-3, 1.0, SMALL)


def test_extract_omega_rejects_zero_field():
    with pytest.raises(ValueError):
        extract_omega(ComplexField(SMALL, np.zeros((64, 64), complex)), Params())
