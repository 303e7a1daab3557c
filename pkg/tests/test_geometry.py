import numpy as np
import pytest
from hypothesis import given, strategies as st

from bvlab.geometry import (DomainError, InvalidQueryError, commutator_residual_at, div_at,
                            gradient_at, inner_product_at, laplace_at, metric_at, norm_at,
                            spherical_band, surface_of_revolution, unit_outer_normal,
                            weighted_interval)

from conftest import all_geometries, small_grid


def test_metric_positive_definite_with_inverse(geometry, rng):
    lo, hi = geometry.transverse_range
    for _ in range(50):
        z = [rng.uniform(lo, hi)] + ([rng.uniform(0, 2 * np.pi)] if geometry.dim == 2 else [])
        m = metric_at(geometry, z)
        assert np.min(np.linalg.eigvalsh(m.g)) > 0
        np.testing.assert_allclose(m.g @ m.g_inv, np.eye(geometry.dim), atol=1e-12)
        assert m.sqrt_det == pytest.approx(np.sqrt(np.linalg.det(m.g)))


def test_band_metric_closed_form():
    m = metric_at(spherical_band(), [1.0, 0.2])
    np.testing.assert_allclose(np.diag(m.g), [1.0, np.sin(1.0) ** 2])
    # the unit sphere has Gauss curvature 1, so Ric = g
    np.testing.assert_allclose(m.ricci, m.g, atol=1e-12)


def test_flat_geometries_have_zero_ricci():
    for geom in (weighted_interval(), surface_of_revolution()):
        z = [0.4] if geom.dim == 1 else [0.4, 1.0]
        assert np.allclose(metric_at(geom, z).ricci, 0.0)


def test_unit_outer_normal_has_unit_length_and_points_out(geometry):
    grid = small_grid(geometry)
    for z, side in zip(grid.boundary.centers.T, grid.boundary.side):
        n = unit_outer_normal(geometry, z)
        assert norm_at(geometry, z, n) == pytest.approx(1.0, abs=1e-12)
        assert np.sign(n[0]) == side


def test_normal_requested_inside_raises():
    band = spherical_band()
    with pytest.raises(InvalidQueryError):
        unit_outer_normal(band, [1.0, 0.5])


def test_point_outside_domain_raises():
    with pytest.raises(DomainError):
        metric_at(spherical_band(), [0.1, 0.0])
    with pytest.raises(ValueError):
        metric_at(weighted_interval(), [0.5, 0.5])


@pytest.mark.parametrize("bad", [
    lambda: spherical_band(1.0, 0.5),
    lambda: spherical_band(0.0, 1.0),
    lambda: weighted_interval(1.0, 0.0),
    lambda: weighted_interval(0.0, 1.0, "cubic"),
    lambda: surface_of_revolution(0.0, 1.0, "sine", 0.9),
])
def test_invalid_geometries_rejected(bad):
    with pytest.raises(ValueError):
        bad()


@given(st.floats(0.9, 1.4), st.floats(0.0, 6.2))
def test_inner_product_symmetric(theta, phi):
    band = spherical_band()
    X, Y = np.array([0.3, -1.2]), np.array([2.0, 0.7])
    assert inner_product_at(band, [theta, phi], X, Y) == pytest.approx(inner_product_at(band, [theta, phi], Y, X))


def test_divergence_and_laplace_closed_forms_second_order():
    band = spherical_band()
    z = np.array([1.0, 0.3])
    errs_div, errs_lap = [], []
    for h in (1e-2, 5e-3, 2.5e-3):
        errs_div.append(abs(div_at(band, lambda y: np.stack([np.sin(y[0]), 0 * y[1]]), z, h) - 2 * np.cos(1.0)))
        errs_lap.append(abs(laplace_at(band, lambda y: np.cos(y[0]), z, h) + 2 * np.cos(1.0)))
    for e in (errs_div, errs_lap):
        assert np.all(np.log2(np.array(e[:-1]) / np.array(e[1:])) >= 1.7)


def test_gradient_on_weighted_interval():
    geom = weighted_interval(0.0, 1.0, "linear", 1.0)
    # g = w^2 with w = 1 + x, so grad u = u' / w^2
    g = gradient_at(geom, lambda y: y[0] ** 2, np.array([0.5]), 1e-4)
    assert g[0] == pytest.approx(1.0 / 1.5 ** 2, rel=1e-6)


def test_one_sided_differences_near_boundary():
    geom = weighted_interval()
    val, one_sided = div_at(geom, lambda y: y ** 2, np.array([1e-4]), 1e-3, full_output=True)
    assert one_sided
    assert val == pytest.approx(2e-4, abs=1e-9)


def test_commutator_identity_band_halves():
    band = spherical_band()
    res = [commutator_residual_at(band, lambda y: np.cos(y[0]), np.array([np.pi / 3, 0.5]), h)
           for h in (1e-2, 5e-3, 2.5e-3)]
    assert res[0] / res[1] >= 2 and res[1] / res[2] >= 2


@pytest.mark.parametrize("name", ["interval", "cylinder"])
def test_commutator_identity_flat_is_exact(name):
    geom = all_geometries()[name]
    z = np.array([0.4]) if geom.dim == 1 else np.array([0.4, 2.0])
    r = commutator_residual_at(geom, lambda y: np.exp(y[0]) * np.cos(3 * y[0]), z, 1e-3)
    assert r <= 1e-8


def test_volume_matches_closed_forms():
    band = spherical_band(0.5, 1.2)
    assert band.volume() == pytest.approx(2 * np.pi * (np.cos(0.5) - np.cos(1.2)))
    assert weighted_interval(0.0, 1.0, "linear", 1.0).volume() == pytest.approx(1.5)
    assert surface_of_revolution(0.0, 2.0).volume() == pytest.approx(4 * np.pi)
