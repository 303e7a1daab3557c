import numpy as np
import pytest
from hypothesis import given, strategies as st

from bvlab.geometry import spherical_band, surface_of_revolution, weighted_interval
from bvlab.grid import build_grid, integrate
from bvlab.harness.config import shipped, shipped_configs
from bvlab.problem import (FluxFamily, InitialSpec, MollifierSpec, Scenario, advective_rate,
                           cfl_timestep, diffusive_rate, mollify_initial, stable_dt, verify_div_free)
from bvlab.bv_trace import tv_jump


@pytest.mark.parametrize("path", shipped_configs(), ids=lambda p: p.stem)
def test_shipped_families_divergence_free(path):
    sc = shipped(path.name).scenario
    for t in (0.0, 0.5 * sc.horizon, sc.horizon):
        assert verify_div_free(sc.flux, None, t, 0.7) <= 1e-5


def test_sine_amplitude_and_envelope():
    band = spherical_band()
    fam = FluxFamily(band, "linear", a=2.0, a_mode="sine", period=4.0, c=0.5)
    z = np.array([[1.0], [0.0]])
    np.testing.assert_allclose(fam.direction(z, 1.0)[0], 2.0 / np.sin(1.0))
    np.testing.assert_allclose(fam.direction(z, 2.0)[0], 0.0, atol=1e-12)
    assert np.all(np.abs(fam.direction(z, 0.7)) <= fam.direction_envelope(z) + 1e-15)


def test_flux_family_validation():
    with pytest.raises(ValueError):
        FluxFamily(weighted_interval(), "cubic")
    with pytest.raises(ValueError):
        FluxFamily(weighted_interval(), c=1.0)
    with pytest.raises(ValueError):
        FluxFamily(spherical_band(), a_mode="random")


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_burgers_max_speed(a, b):
    fam = FluxFamily(weighted_interval(), "burgers")
    lo, hi = min(a, b), max(a, b)
    assert fam.max_dh((lo, hi)) == pytest.approx(max(abs(lo), abs(hi)))


@pytest.mark.parametrize("profile,params", [
    ("constant", {"value": 0.5}), ("step", {"left": 1.0, "right": -1.0, "position": 0.4}),
    ("box", {"amplitude": 2.0, "start": 0.2, "stop": 0.6}), ("bump", {"amplitude": 1.0, "center": 0.5, "width": 0.2}),
    ("cos", {"amplitude": 1.0}),
])
def test_initial_profiles_bounded(profile, params):
    grid = build_grid(weighted_interval(), (64,))
    u = InitialSpec(profile, params).field_on(grid).values
    assert np.all(np.isfinite(u))
    assert np.max(np.abs(u)) <= max(abs(v) for v in params.values()) + 1e-12


def test_csv_profile_roundtrip(tmp_path):
    from bvlab.grid import write_field_csv
    grid = build_grid(spherical_band(), (16, 4))
    u = grid.sample(lambda z: np.sin(z[0]) * np.cos(z[1]))
    write_field_csv(tmp_path / "u0.csv", u)
    back = InitialSpec("csv", {}, str(tmp_path / "u0.csv")).field_on(grid)
    assert np.array_equal(back.values, u.values)


def test_mollifier_preserves_constants_and_clamps():
    grid = build_grid(spherical_band(), (64, 16))
    c = mollify_initial(grid, np.full(grid.shape, 0.3), 0.01)
    np.testing.assert_allclose(c.values, 0.3, atol=1e-14)
    box = grid.sample(lambda z: ((z[0] > 1.0) & (z[0] < 1.3)) * 1.0)
    out = mollify_initial(grid, box, 0.01).values
    assert np.max(np.abs(out)) <= 1.0


def test_mollifier_converges_in_l1_and_tv():
    sc = shipped("ac_11").scenario
    grid = sc.build_grid()
    u0 = sc.initial_field(grid).values
    l1, tv = [], []
    for eps in (0.1, 0.05, 0.025):
        ue = mollify_initial(grid, u0, eps).values
        l1.append(integrate(grid, np.abs(ue - u0)))
        tv.append(abs(tv_jump(grid, ue) - tv_jump(grid, u0)))
    assert l1[0] > l1[1] > l1[2]
    assert tv[0] > tv[1] > tv[2]


def test_mollifier_rejects_wide_kernel():
    grid = build_grid(weighted_interval(), (32,))
    with pytest.raises(ValueError):
        mollify_initial(grid, np.zeros(32), 0.5)
    with pytest.raises(ValueError):
        mollify_initial(grid, np.zeros(32), 0.0)


def test_mollifier_without_clamp_can_exceed_nothing_for_positive_kernel():
    grid = build_grid(weighted_interval(), (64,))
    u = grid.sample(lambda z: (z[0] > 0.5) * 1.0)
    out = mollify_initial(grid, u, 0.01, MollifierSpec(clamp=False)).values
    # a positive normalised kernel is already a convex combination
    assert out.min() >= -1e-15 and out.max() <= 1 + 1e-15


def test_cfl_formula_matches_stable_dt_on_uniform_interval():
    geom = weighted_interval()
    n = 100
    grid = build_grid(geom, (n,))
    sc = Scenario(geom, FluxFamily(geom), InitialSpec("constant", {"value": 1.0}), 1.0, (n,))
    assert stable_dt(sc, grid, 0.0, (-1, 1)) == pytest.approx(cfl_timestep(0.45, 1 / n, 1.0, 0.0, 1, 1.0))
    visc = sc.replace(viscosity=0.01, flux=FluxFamily(geom, a=0.0))
    # boundary cells diffuse 3/2 times faster under the odd ghost
    assert stable_dt(visc, grid, 0.0, (-1, 1)) == pytest.approx(
        cfl_timestep(0.45, 1 / n, 0.0, 0.01, 1, 1.0) * 2 / 3)


def test_rates_nonnegative_on_revolution():
    geom = surface_of_revolution(0.0, 4.0, "sine", 0.3, 4.0)
    grid = build_grid(geom, (40, 8))
    fam = FluxFamily(geom, "burgers", c=0.5)
    assert np.all(advective_rate(fam, grid, (-1, 1)) > 0)
    assert np.all(diffusive_rate(grid, 0.1) > 0)


def test_scenario_validation_and_output_times():
    geom = weighted_interval()
    sc = Scenario(geom, FluxFamily(geom), InitialSpec(), 2.0, (16,), cadence=4)
    assert sc.output_times() == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert sc.refined(2).resolution == (32,)
    for kw in ({"horizon": 0.0}, {"cfl": 1.5}, {"viscosity": -1.0}, {"cadence": 0}):
        with pytest.raises(ValueError):
            sc.replace(**kw)
    with pytest.raises(ValueError):
        sc.replace(flux=FluxFamily(weighted_interval(0.0, 2.0)))
