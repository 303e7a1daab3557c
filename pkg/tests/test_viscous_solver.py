import numpy as np
import pytest
from hypothesis import given, strategies as st

from bvlab.fv import InstabilityError
from bvlab.grid import CellField, integrate
from bvlab.harness.acceptance import tv_history
from bvlab.harness.config import shipped
from bvlab.problem import mollify_initial
from bvlab.viscous_solver import (ViscousOperator, ViscousState, fit_tv_envelope, solve_viscous,
                                  step_viscous, time_derivative_l1, tv_envelope)


@pytest.mark.parametrize("name", ["ac_4_viscous", "ac_5", "ac_11_revolution"])
def test_maximum_principle(name):
    sc = shipped(name).scenario
    grid = sc.build_grid()
    ue = mollify_initial(grid, sc.initial_field(grid), sc.viscosity, sc.mollifier).values
    _, _, loop = solve_viscous(sc, grid)
    for snap in loop.snapshots:
        assert snap.min() >= min(ue.min(), 0) - 1e-8
        assert snap.max() <= max(ue.max(), 0) + 1e-8


def test_mass_changes_only_through_the_boundary():
    sc = shipped("ac_5").scenario
    _, series, _ = solve_viscous(sc)
    for rec in series:
        assert rec.mass + rec.mass_flux_boundary == pytest.approx(series[0].mass, abs=1e-10)


def test_heat_equation_conserves_nothing_at_zero_data():
    sc = shipped("ac_5").scenario.replace(horizon=0.01)
    grid = sc.build_grid()
    state = ViscousState(0.0, CellField(np.zeros(grid.shape), grid), grid, sc)
    assert np.all(step_viscous(state, 1e-4).u.values == 0.0)


def test_unstable_step_detected():
    sc = shipped("ac_5").scenario
    grid = sc.build_grid()
    u = mollify_initial(grid, sc.initial_field(grid), sc.viscosity).values
    with pytest.raises(InstabilityError):
        step_viscous(ViscousState(0.0, CellField(u, grid), grid, sc), 1.0)


def test_solve_viscous_requires_viscosity():
    with pytest.raises(ValueError):
        solve_viscous(shipped("ac_4").scenario)


def test_time_derivative_bounded_uniformly_in_eps():
    base = shipped("ac_5").scenario
    grid = base.build_grid()
    tv0 = __import__("bvlab").bv_trace.tv_jump(grid, base.initial_field(grid))
    ratios = [time_derivative_l1(solve_viscous(base.replace(viscosity=e))[1]) / tv0 for e in (0.1, 0.05, 0.025)]
    assert max(ratios) <= 1.2 * ratios[0]


def test_viscous_flat_interval_is_tvd():
    _, _, worst = tv_history(shipped("ac_4").scenario.replace(viscosity=0.05))
    assert worst <= 1e-12


def test_rhs_of_constant_inside_is_zero():
    sc = shipped("ac_5").scenario
    grid = sc.build_grid()
    op = ViscousOperator(sc.replace(flux=sc.flux.__class__(sc.geometry, "linear", a=0.0)), grid)
    k, _ = op.rhs(np.ones(grid.shape), 0.0)
    np.testing.assert_allclose(k[1:-1], 0.0, atol=1e-12)
    assert k[0] < 0 and k[-1] < 0   # the Dirichlet datum pulls the ends down


@given(st.floats(0.0, 2.0), st.floats(0.1, 5.0))
def test_envelope_fit_is_minimal(c_true, tv0):
    t = np.linspace(0, 1, 11)
    tv = tv_envelope(t, tv0, c_true)
    c = fit_tv_envelope(t, tv, tv0)
    assert np.all(tv <= tv_envelope(t, tv0, c) * (1 + 1e-12))
    assert c <= c_true + 1e-8


def test_envelope_zero_for_nonincreasing_tv():
    assert fit_tv_envelope([0, 1, 2], [2.0, 1.5, 1.0], 2.0) == 0.0
    with pytest.raises(ValueError):
        fit_tv_envelope([0, 1], [0.0, 0.0], 0.0)


def test_time_derivative_needs_records():
    with pytest.raises(ValueError):
        time_derivative_l1([])
