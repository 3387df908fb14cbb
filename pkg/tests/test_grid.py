import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rotgpe.grid import (
    ComplexField,
    GridSpec,
    RadialField,
    apply_grad_A,
    apply_Lz,
    boundary_ratio,
    gradient,
    integrate,
    quadrature_fault,
    read_field,
    rotate_frame,
    warn_if_boundary_mass,
    write_field,
)
from rotgpe.trials import VortexTrial

from conftest import rand_field


def _gauss(grid, b=0.5):
    return grid.sample(lambda x1, x2: np.exp(-b * (x1 * x1 + x2 * x2)))


@pytest.mark.parametrize("n", [7, 12, 4, 0])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        GridSpec(5.0, n)


def test_grid_rejects_nonpositive_width():
    with pytest.raises(ValueError):
        GridSpec(0.0, 16)


def test_grid_coordinates():
    g = GridSpec(4.0, 16)
    assert g.dx == 0.5
    assert g.x[0] == -4.0 and g.x[-1] == 3.5
    x1, x2 = g.mesh()
    # ij indexing: axis 0 runs along x1
    assert np.all(x1[:, 0] == g.x) and np.all(x2[0, :] == g.x)


def test_gaussian_integral(small_grid):
    # int exp(-|x|^2) = pi
    f = _gauss(small_grid, 0.5)
    assert integrate(f, lambda x1, x2, v: np.abs(v) ** 2) == pytest.approx(math.pi, rel=1e-12)


def test_integrate_names_nonfinite_index(small_grid):
    f = _gauss(small_grid)
    f.values[3, 5] = np.nan
    with pytest.raises(ValueError, match=r"\(3, 5\)"):
        integrate(f, lambda x1, x2, v: np.abs(v) ** 2)


def test_quadrature_fault_restores(small_grid):
    f = _gauss(small_grid)
    base = integrate(f, lambda x1, x2, v: np.abs(v) ** 2)
    with quadrature_fault(2.0):
        assert integrate(f, lambda x1, x2, v: np.abs(v) ** 2) == pytest.approx(2 * base)
    assert integrate(f, lambda x1, x2, v: np.abs(v) ** 2) == base


def test_gradient_of_gaussian(small_grid):
    f = _gauss(small_grid, 0.7)
    x1, x2 = small_grid.mesh()
    d1, d2 = gradient(f)
    assert np.max(np.abs(d1.values - (-1.4 * x1) * f.values)) < 1e-11
    assert np.max(np.abs(d2.values - (-1.4 * x2) * f.values)) < 1e-11


def test_Lz_eigenvalue(small_grid):
    # (x1 + i x2) e^{-r^2/2} has angular momentum +1
    x1, x2 = small_grid.mesh()
    f = ComplexField(small_grid, (x1 + 1j * x2) * np.exp(-(x1 ** 2 + x2 ** 2) / 2))
    assert np.max(np.abs(apply_Lz(f).values - f.values)) < 1e-11


def test_grad_A_reduces_to_gradient(small_grid):
    f = rand_field(0, small_grid)
    g0 = gradient(f)
    ga = apply_grad_A(f, 0.0)
    assert np.allclose(ga[0].values, g0[0].values) and np.allclose(ga[1].values, g0[1].values)


@given(st.floats(-7.0, 7.0))
def test_rotation_is_exact_on_vortex(angle):
    # f(R(a)x) for a winding-m state is exp(-i m a) f
    g = GridSpec(8.0, 64)
    f = VortexTrial(3, 1.0, 1.0).field(g)
    rot = rotate_frame(f, angle)
    assert np.max(np.abs(rot.values - np.exp(-3j * angle) * f.values)) < 1e-10
    assert rot.frame_angle == pytest.approx(angle)


@given(st.floats(-3.0, 3.0), st.integers(0, 2 ** 16))
def test_rotation_roundtrip_and_mass(angle, seed):
    g = GridSpec(10.0, 64)
    f = rand_field(seed, g, width=0.9)
    rot = rotate_frame(f, angle)
    back = rotate_frame(rot, -angle)
    assert np.max(np.abs(back.values - f.values)) < 1e-10 * np.abs(f.values).max()
    m0 = np.sum(np.abs(f.values) ** 2)
    assert np.sum(np.abs(rot.values) ** 2) == pytest.approx(m0, rel=1e-12)


def test_quarter_turn_matches_analytic(small_grid):
    x1, x2 = small_grid.mesh()
    f = ComplexField(small_grid, x1 * np.exp(-(x1 ** 2 + x2 ** 2)))
    rot = rotate_frame(f, math.pi / 2)
    # x1 -> x1 cos a + x2 sin a = x2
    assert np.max(np.abs(rot.values - x2 * np.exp(-(x1 ** 2 + x2 ** 2)))) < 1e-14


def test_cubic_rotation_close_to_spectral():
    g = GridSpec(8.0, 128)
    f = VortexTrial(2, 1.0, 1.0).field(g)
    a = rotate_frame(f, 0.37, method="spectral").values
    b = rotate_frame(f, 0.37, method="cubic").values
    assert np.max(np.abs(a - b)) < 1e-3 * np.abs(a).max()
    with pytest.raises(ValueError):
        rotate_frame(f, 0.1, method="nearest")


def test_field_dump_roundtrip(tmp_path, small_grid):
    f = rand_field(4, small_grid).with_values(rand_field(4, small_grid).values, frame_angle=0.25)
    path = tmp_path / "f.rgf"
    write_field(path, f)
    g = read_field(path)
    assert g.grid == f.grid and g.frame_angle == 0.25
    assert np.array_equal(g.values, f.values)


def test_field_dump_rejects_garbage(tmp_path):
    path = tmp_path / "bad.rgf"
    path.write_bytes(b"NOTAFIELD n=8\n")
    with pytest.raises(ValueError):
        read_field(path)


def test_boundary_warning(small_grid):
    wide = _gauss(small_grid, 0.01)
    assert boundary_ratio(wide.values) > 0.1
    with pytest.warns(RuntimeWarning, match="edge"):
        warn_if_boundary_mass(wide.values)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        warn_if_boundary_mass(_gauss(small_grid, 1.0).values)


def test_random_field_deterministic(small_grid):
    a, b = rand_field(11, small_grid), rand_field(11, small_grid)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, rand_field(12, small_grid).values)


def test_fields_on_different_grids_do_not_mix():
    a = rand_field(0, GridSpec(10.0, 64))
    b = rand_field(0, GridSpec(10.0, 128))
    with pytest.raises(ValueError):
        a + b


def test_radial_field_lift_preserves_mass():
    r_max, m = 12.0, 2000
    h = r_max / m
    r = (np.arange(m) + 0.5) * h
    prof = RadialField(r_max, np.exp(-r * r / 2))
    # midpoint rule in r: O(h^2) ~ 3e-6 here
    assert prof.integrate(lambda r, v: v * v) == pytest.approx(math.pi, rel=1e-5)
    lifted = prof.lift(GridSpec(10.0, 128))
    assert np.sum(np.abs(lifted.values) ** 2) * lifted.grid.cell_area == pytest.approx(math.pi, rel=1e-5)
