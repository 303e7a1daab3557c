import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from bvlab.geometry import spherical_band, weighted_interval
from bvlab.grid import (CellField, GridMismatchError, boundary_integrate, build_cutoff, build_grid,
                        discrete_laplace, divergence_of_face_fluxes, face_normal_flux, gradient_norm,
                        integrate, lebesgue_average, metric_distance, read_field_csv, smoothstep,
                        values_of, write_field_csv)

from conftest import small_grid


def test_cell_volumes_sum_to_area_second_order():
    band = spherical_band()
    errs = [abs(integrate(build_grid(band, (n, 8)), np.ones((n, 8))) - band.volume()) for n in (8, 16, 32)]
    assert np.all(np.log2(np.array(errs[:-1]) / np.array(errs[1:])) >= 1.9)


def test_discrete_divergence_theorem_telescopes(geometry, rng):
    grid = small_grid(geometry)

    def X(z):
        if grid.dim == 1:
            return np.exp(z) * 0.7
        return np.stack([np.cos(3 * z[0]) + z[1], np.sin(2 * z[1])])

    qt, qp = face_normal_flux(grid, X)
    total = np.sum(divergence_of_face_fluxes(grid, qt, qp) * grid.cell_volume)
    assert total == pytest.approx(np.sum(qt[-1]) - np.sum(qt[0]), abs=1e-12)


@given(arrays(float, (20, 6), elements=st.floats(-5, 5)))
def test_laplace_flux_form_sums_to_boundary_flux(u):
    grid = build_grid(spherical_band(), (20, 6))
    lap = discrete_laplace(grid, u).values
    # interior fluxes cancel; the odd ghost sends 2 u_b / h through each boundary face
    inflow = np.sum(grid.tface_diff[0] * 2 * u[0]) + np.sum(grid.tface_diff[-1] * 2 * u[-1])
    assert integrate(grid, lap) == pytest.approx(-inflow, abs=1e-9 * (1 + np.abs(u).max()))


def test_laplace_of_sphere_eigenfunction_away_from_boundary():
    band = spherical_band(0.3, 2.8)
    grid = build_grid(band, (400, 8))
    u = grid.sample(lambda z: np.cos(z[0]))
    lap = discrete_laplace(grid, u).values
    interior = slice(20, -20)
    np.testing.assert_allclose(lap[interior], -2 * u.values[interior], atol=1e-4)


def test_field_mismatch_raises():
    g1, g2 = build_grid(weighted_interval(), (10,)), build_grid(weighted_interval(), (10,))
    with pytest.raises(GridMismatchError):
        values_of(g1, CellField(np.zeros(10), g2))
    with pytest.raises(GridMismatchError):
        integrate(g1, np.zeros(11))
    with pytest.raises(GridMismatchError):
        boundary_integrate(g1, np.zeros(3))
    with pytest.raises(ValueError):
        build_grid(spherical_band(), (10,))
    with pytest.raises(ValueError):
        build_grid(weighted_interval(), (3,))


def test_non_finite_field_rejected():
    grid = build_grid(weighted_interval(), (8,))
    with pytest.raises(ValueError):
        grid.field(np.full(8, np.nan))


@given(st.floats(-3, 3))
def test_smoothstep_bounds(t):
    s = smoothstep(t)
    assert 0.0 <= s <= 1.0
    if t <= 0:
        assert s == 1.0
    if t >= 1:
        assert s == 0.0


def test_cutoff_is_one_at_boundary_and_zero_inside():
    grid = build_grid(weighted_interval(), (200,))
    cut = build_cutoff(grid, 0.2)
    d = grid.distance
    assert np.all(cut.values[d <= 0.1 - 1e-12] == 1.0)
    assert np.all(cut.values[d >= 0.2] == 0.0)
    with pytest.raises(ValueError):
        build_cutoff(grid, 0.6)


def test_gradient_norm_of_linear_field():
    grid = build_grid(weighted_interval(0.0, 1.0, "linear", 1.0), (64,))
    gn = gradient_norm(grid, grid.sample(lambda z: z[0]))
    # |grad x|_g = 1 / w
    np.testing.assert_allclose(gn[1:-1], 1.0 / (1.0 + grid.centers[0][1:-1]), rtol=1e-10)


def test_metric_distance_wraps_azimuth():
    grid = build_grid(spherical_band(), (16, 16))
    d = metric_distance(grid, np.array([1.0, 0.01]))
    j_far = grid.shape[1] - 1
    assert d[0, j_far] < np.pi   # the short way round
    assert np.all(d >= 0)


def test_lebesgue_average_of_constant():
    grid = build_grid(spherical_band(), (32, 8))
    assert lebesgue_average(grid, np.full(grid.shape, 2.5), np.array([1.0, 1.0]), 0.2) == pytest.approx(2.5)


def test_csv_roundtrip_is_exact(tmp_path, geometry, rng):
    grid = small_grid(geometry)
    u = CellField(rng.normal(size=grid.shape), grid)
    write_field_csv(tmp_path / "u.csv", u)
    back = read_field_csv(tmp_path / "u.csv", grid)
    assert np.array_equal(back.values, u.values)


def test_csv_missing_cells_rejected(tmp_path):
    grid = build_grid(weighted_interval(), (8,))
    (tmp_path / "u.csv").write_text("i,z1,value\n0,0.1,1.0\n")
    with pytest.raises(GridMismatchError):
        read_field_csv(tmp_path / "u.csv", grid)
