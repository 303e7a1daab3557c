import numpy as np
import pytest
from hypothesis import given, strategies as st

from bvlab.fv import AdvectionOperator, InstabilityError, godunov_flux, run_loop
from bvlab.geometry import spherical_band, weighted_interval
from bvlab.grid import build_grid, integrate
from bvlab.harness.config import shipped
from bvlab.problem import FluxFamily

BURGERS = FluxFamily(weighted_interval(), "burgers")
LINEAR = FluxFamily(weighted_interval(), "linear")


@pytest.mark.parametrize("a,b,expected", [
    (1.0, 0.0, 0.5), (0.0, 1.0, 0.0), (-1.0, 1.0, 0.0), (1.0, -1.0, 0.5), (0.5, 0.5, 0.125), (-1.0, -0.5, 0.125)])
def test_godunov_burgers_riemann_values(a, b, expected):
    assert float(godunov_flux(BURGERS, np.array(a), np.array(b), np.array(1.0))) == expected


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_godunov_linear_is_upwind(a, b, q):
    g = float(godunov_flux(LINEAR, np.array(a), np.array(b), np.array(q)))
    assert g == pytest.approx(q * (a if q >= 0 else b))


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_godunov_consistent_and_monotone(a, b, q):
    assert float(godunov_flux(BURGERS, np.array(a), np.array(a), np.array(q))) == pytest.approx(q * 0.5 * a * a)
    d = 1e-3
    g = lambda x, y: float(godunov_flux(BURGERS, np.array(x), np.array(y), np.array(q)))
    assert g(a + d, b) >= g(a, b) - 1e-12
    assert g(a, b + d) <= g(a, b) + 1e-12


def test_divergence_conserves_mass_up_to_boundary_flux(rng):
    sc = shipped("ac_4_band").scenario
    grid = sc.build_grid()
    adv = AdvectionOperator(sc.flux, grid)
    u = rng.uniform(-1, 1, grid.shape)
    div, out = adv.divergence(u, 0.3)
    assert integrate(grid, div) == pytest.approx(out, abs=1e-12)


def test_run_loop_lands_on_output_times():
    sc = shipped("ac_4").scenario
    grid = sc.build_grid()
    adv = AdvectionOperator(sc.flux, grid)
    res = run_loop(sc, grid, sc.initial_field(grid).values,
                   lambda u, t, dt: (u - dt * adv.divergence(u, t)[0], 0.0))
    assert [r.t for r in res.records] == sc.output_times()
    assert len(res.snapshots) == sc.cadence + 1
    assert sum(res.dts) == pytest.approx(sc.horizon)


def test_run_loop_detects_growth():
    sc = shipped("ac_4").scenario
    grid = sc.build_grid()
    with pytest.raises(InstabilityError) as info:
        run_loop(sc, grid, sc.initial_field(grid).values, lambda u, t, dt: (2.0 * u, 0.0))
    assert info.value.step == 1


def test_entropy_fluxes_reduce_to_flux_difference_far_from_k(rng):
    grid = build_grid(spherical_band(), (16, 4))
    fam = FluxFamily(spherical_band(), "burgers", c=0.3)
    adv = AdvectionOperator(fam, grid)
    u = rng.uniform(0.5, 1.0, grid.shape)
    # k below every state: Q(a, b) = F(a, b) - F(k, k)
    qt_e, _ = adv.entropy_fluxes(u, 0.0, -0.2)
    qt, _ = adv.fluxes(u, 0.0, ghost=0.0)
    interior = slice(1, -1)
    kflux = adv.fluxes(np.full(grid.shape, -0.2), 0.0, ghost=-0.2)[0]
    np.testing.assert_allclose(qt_e[interior], (qt - kflux)[interior], atol=1e-14)
