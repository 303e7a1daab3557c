"""
Property suites behind ``bvlab verify <suite>``.

Each suite runs the module invariants as named checks. With ``full=True``
the suites also run the acceptance criteria that belong to them, which
takes minutes. The quick form runs in seconds.
"""

import time
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .. import fv
from ..bv_trace import extract_trace, total_variation, tv_jump
from ..entropy_solver import (EntropyCheckConfig, entropy_residuals_all_levels, euler_update,
                              solve_hyperbolic)
from ..geometry import (div_at, laplace_at, norm_at, spherical_band, surface_of_revolution,
                        unit_outer_normal, weighted_interval)
from ..grid import (build_cutoff, build_grid, divergence_of_face_fluxes, face_normal_flux,
                    gradient_norm, integrate, smoothstep)
from ..oracles import BURGERS_CASES, CharacteristicTracer, burgers_interval_exact
from ..problem import FluxFamily, mollify_initial, verify_div_free
from ..viscous_solver import ViscousOperator, solve_viscous, time_derivative_l1
from . import acceptance as acc
from .acceptance import Check, Criterion, _fmt, _orders
from .config import shipped, shipped_configs

SUITES = ("geometry", "trace", "viscous", "entropy", "contraction", "limit")


@dataclass
class Report:
    suite: str
    checks: List[Check] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def lines(self):
        out = [c.line() for c in self.checks]
        n_ok = sum(c.passed for c in self.checks)
        out.append(f"verify {self.suite}: {n_ok}/{len(self.checks)} checks passed in {self.wall_time:.1f} s"
                   f" -> {'PASS' if self.passed else 'FAIL'}")
        return out


def _geometries():
    return {"interval": weighted_interval(), "weighted interval": weighted_interval(0.0, 1.0, "linear", 1.0),
            "band": spherical_band(), "cylinder": surface_of_revolution(),
            "sine revolution": surface_of_revolution(0.0, 4.0, "sine", 0.3, 4.0)}


def _random_points(geom, n, rng, margin=0.0):
    lo, hi = geom.transverse_range
    pts = [rng.uniform(lo + margin, hi - margin, n)]
    if geom.dim == 2:
        pts.append(rng.uniform(0.0, 2 * np.pi, n))
    return np.stack(pts)


def _from_criterion(n: int, cached: bool):
    crit = acc.run_criterion(n) if cached else acc.CRITERIA[n]()
    return [Check(f"AC{crit.number} {c.name}", c.passed, c.measured, c.threshold) for c in crit.checks]


# -- geometry -----------------------------------------------------------------

def geometry_checks(crit: Criterion):
    rng = np.random.default_rng(0)

    def spd():
        worst_eig, worst_inv = np.inf, 0.0
        for geom in _geometries().values():
            z = _random_points(geom, 10_000, rng)
            g = geom.metric_diag(z)
            worst_eig = min(worst_eig, float(np.min(g)))
            worst_inv = max(worst_inv, float(np.max(np.abs(g * (1.0 / g) - 1.0))))
        crit.add("metric positive definite with exact inverse", worst_eig > 0 and worst_inv < 1e-12,
                 "min eigenvalue %.4g, max |g g^-1 - I| %.3g" % (worst_eig, worst_inv), "> 0 and < 1e-12")

    def normals():
        worst = 0.0
        for geom in _geometries().values():
            grid = build_grid(geom, (16,) if geom.dim == 1 else (16, 8))
            for z in grid.boundary.centers.T:
                worst = max(worst, abs(norm_at(geom, z, unit_outer_normal(geom, z)) - 1.0))
        crit.add("unit outer normal has unit length", worst <= 1e-12, "max deviation %.3g" % worst, "<= 1e-12")

    def div_free():
        worst, h = 0.0, 1e-3
        for path in shipped_configs():
            sc = shipped(path.name).scenario
            X = sc.flux.direction
            for t in (0.0, 0.5 * sc.horizon, sc.horizon):
                z = _random_points(sc.geometry, 1000, rng)
                worst = max(worst, float(np.max(np.abs(div_at(sc.geometry, lambda y: X(y, t), z, h)))))
        crit.add("shipped direction fields divergence-free", worst <= h * h,
                 "max |div X| %.3g at fd_step %g" % (worst, h), "<= fd_step^2")

    def orders():
        band = spherical_band()
        z = np.array([1.0, 0.3])
        steps = (1e-2, 5e-3, 2.5e-3)
        # div (sin theta, 0) = 2 cos theta and Laplace cos theta = -2 cos theta on the unit sphere
        d = [abs(float(div_at(band, lambda y: np.stack([np.sin(y[0]), 0 * y[1]]), z, h)) - 2 * np.cos(1.0))
             for h in steps]
        lap = [abs(float(laplace_at(band, lambda y: np.cos(y[0]), z, h)) + 2 * np.cos(1.0)) for h in steps]
        for name, e in (("divergence", d), ("Laplace-Beltrami", lap)):
            o = _orders(e)
            crit.add(f"finite-difference {name} order", np.all(o >= 1.7), f"errors {_fmt(e)}, orders {_fmt(o)}",
                     "every order >= 1.7")

    def divergence_theorem():
        worst = 0.0
        for geom in _geometries().values():
            grid = build_grid(geom, (24,) if geom.dim == 1 else (24, 12))

            def X(y):
                return np.stack([np.cos(2 * y[0]) + 0.5, np.sin(y[1])]) if geom.dim == 2 else np.exp(y)

            qt, qp = face_normal_flux(grid, X)
            total = float(np.sum(divergence_of_face_fluxes(grid, qt, qp) * grid.cell_volume))
            bnd = float(np.sum(qt[-1]) - np.sum(qt[0]))
            worst = max(worst, abs(total - bnd))
        crit.add("discrete divergence theorem", worst <= 1e-12, "max |sum div vol - boundary flux| %.3g" % worst,
                 "<= 1e-12")

    def volume_order():
        geom = spherical_band()
        errs = [abs(integrate(build_grid(geom, (n, 8)), np.ones((n, 8))) - geom.volume()) for n in (8, 16, 32)]
        o = _orders(errs)
        crit.add("cell volumes converge to the surface area", np.all(o >= 1.9), f"errors {_fmt(errs)}, orders {_fmt(o)}",
                 "every order >= 1.9")

    def cutoff_decay():
        geom = surface_of_revolution(0.0, 4.0, "sine", 0.3, 4.0)
        grid = build_grid(geom, (800, 8))
        gn = gradient_norm(grid, grid.sample(lambda z: np.sin(z[0]) + 0.2 * np.cos(z[1])))
        vals = [integrate(grid, build_cutoff(grid, d).values * gn) for d in (0.2, 0.1, 0.05)]
        ratios = np.array(vals[:-1]) / np.array(vals[1:])
        crit.add("cutoff mass of |grad u| decays linearly in delta", np.all(np.abs(ratios - 2) <= 0.2),
                 f"integrals {_fmt(vals)}, ratios {_fmt(ratios)}", "ratio 2 +- 0.2 per halving")

    def level_set_decay():
        grid = build_grid(weighted_interval(), (400,))
        u = grid.sample(lambda z: np.sin(np.pi * z[0])).values
        gn = gradient_norm(grid, u)
        vals = [integrate(grid, gn * (np.abs(u) < eta)) for eta in (0.1, 0.05, 0.025)]
        crit.add("small level sets carry vanishing gradient mass", all(b < a for a, b in zip(vals, vals[1:])),
                 f"integrals {_fmt(vals)} for eta 0.1, 0.05, 0.025", "strictly decreasing")

    for name, fn in (("metric", spd), ("normals", normals), ("div-free fields", div_free), ("orders", orders),
                     ("divergence theorem", divergence_theorem), ("volume", volume_order),
                     ("cutoff", cutoff_decay), ("level sets", level_set_decay)):
        crit.guard(name, fn)


# -- trace --------------------------------------------------------------------

def trace_checks(crit: Criterion):
    rng = np.random.default_rng(2)

    def linearity():
        worst = 0.0
        for geom in _geometries().values():
            grid = build_grid(geom, (32,) if geom.dim == 1 else (32, 8))
            u, v = rng.normal(size=grid.shape), rng.normal(size=grid.shape)
            a, b = 0.7, -1.3
            lhs = extract_trace(grid, a * u + b * v).raw
            rhs = a * extract_trace(grid, u).raw + b * extract_trace(grid, v).raw
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        crit.add("trace estimator linear before projection", worst <= 1e-12, "max deviation %.3g" % worst, "<= 1e-12")

    def bounded():
        worst = -np.inf
        for geom in _geometries().values():
            grid = build_grid(geom, (32,) if geom.dim == 1 else (32, 8))
            for _ in range(20):
                u = rng.uniform(-2, 2, grid.shape) * rng.uniform(0, 1)
                worst = max(worst, float(np.max(np.abs(extract_trace(grid, u).values)) - np.max(np.abs(u))))
        crit.add("trace bounded by the sup norm", worst <= 0.0, "max (|Tu| - |u|) %.3g" % worst, "<= 0")

    def lower_semicontinuity():
        grid = build_grid(weighted_interval(), (2000,))
        step = grid.sample(lambda z: (z[0] > 0.4) * 1.0).values
        tvs, dists = [], []
        for k in (4, 8, 16, 32):
            uk = step + grid.sample(lambda z: np.sin(2 * np.pi * k * z[0]) / k ** 2).values
            tvs.append(tv_jump(grid, uk))
            dists.append(integrate(grid, np.abs(uk - step)))
        lim = tv_jump(grid, step)
        ok = lim <= min(tvs[-2:]) + 1e-12 and all(b < a for a, b in zip(dists, dists[1:]))
        crit.add("total variation lower semicontinuous under L1 convergence", ok,
                 "tv(limit) %.6g, tv(u_k) %s, L1 distances %s" % (lim, _fmt(tvs), _fmt(dists)),
                 "tv(limit) <= liminf tv(u_k) + 1e-12")

    for name, fn in (("linearity", linearity), ("boundedness", bounded), ("lsc", lower_semicontinuity)):
        crit.guard(name, fn)


# -- viscous ------------------------------------------------------------------

VISCOUS_PROBES = ("ac_4_viscous", "ac_5", "ac_11", "ac_11_revolution")


def viscous_checks(crit: Criterion):
    def frozen_div_free():
        worst = 0.0
        for path in shipped_configs():
            sc = shipped(path.name).scenario
            for t in (0.0, 0.5 * sc.horizon, sc.horizon):
                worst = max(worst, verify_div_free(sc.flux, None, t, 0.8))
        crit.add("flux at frozen u divergence-free", worst <= 1e-5, "max %.3g" % worst, "<= 1e-5")

    def maximum_principle():
        for name in VISCOUS_PROBES:
            sc = shipped(name).scenario
            grid = sc.build_grid()
            ue = mollify_initial(grid, sc.initial_field(grid), sc.viscosity, sc.mollifier).values
            snaps = solve_viscous(sc, grid)[2].snapshots
            lo = min(float(np.min(s)) for s in snaps)
            hi = max(float(np.max(s)) for s in snaps)
            ok = lo >= min(ue.min(), 0.0) - 1e-8 and hi <= max(ue.max(), 0.0) + 1e-8
            crit.add(f"{name} viscous range within the data range", ok,
                     "u in [%.6g, %.6g], data in [%.6g, %.6g]" % (lo, hi, ue.min(), ue.max()), "+- 1e-8")

    def uniform_bounds():
        base = shipped("ac_5").scenario
        table = []
        for eps in acc.EPS_LIST:
            _, series, _ = solve_viscous(base.replace(viscosity=eps))
            table.append((max(r.linf for r in series), time_derivative_l1(series), max(r.tv_jump for r in series)))
        table = np.array(table)
        ok = np.all(table <= acc.FIT_MARGIN * table[0] + 1e-12)
        crit.add("sup, time derivative and TV bounded uniformly in eps", ok,
                 "rows per eps " + "; ".join(_fmt(r) for r in table), "every entry <= 1.2 x its eps=0.1 value")

    def conservation():
        worst = 0.0
        for name in VISCOUS_PROBES:
            sc = shipped(name).scenario
            grid = sc.build_grid()
            op = ViscousOperator(sc, grid)
            u = mollify_initial(grid, sc.initial_field(grid), sc.viscosity, sc.mollifier).values
            errs = []

            def stepper(u, t, dt):
                u_new, out = op.heun(u, t, dt)
                errs.append(abs(integrate(grid, u_new) - integrate(grid, u) + dt * out))
                return u_new, out

            fv.run_loop(sc, grid, u, stepper)
            worst = max(worst, max(errs))
        crit.add("mass balance with advective and diffusive boundary flux", worst <= 1e-10,
                 "max per-step imbalance %.3g" % worst, "<= 1e-10")

    for name, fn in (("frozen divergence", frozen_div_free), ("maximum principle", maximum_principle),
                     ("uniform bounds", uniform_bounds), ("conservation", conservation)):
        crit.guard(name, fn)


# -- entropy ------------------------------------------------------------------

ENTROPY_PROBES = ("ac_4", "ac_4_band", "ac_4_revolution", "ac_6_band", "ac_7", "ac_10_shock", "shock_exit")


def entropy_checks(crit: Criterion):
    def godunov_values():
        fam = FluxFamily(weighted_interval(), "burgers")
        cases = [((1.0, 0.0), 0.5), ((0.0, 1.0), 0.0), ((-1.0, 1.0), 0.0), ((1.0, -1.0), 0.5),
                 ((0.5, 0.5), 0.125), ((-1.0, -0.5), 0.125)]
        got = [float(fv.godunov_flux(fam, np.array(a), np.array(b), np.array(1.0))) for (a, b), _ in cases]
        want = [v for _, v in cases]
        err = max(abs(g - w) for g, w in zip(got, want))
        crit.add("Godunov flux for Burgers at unit face speed", err <= 1e-15, f"values {_fmt(got)}",
                 f"{_fmt(want)} within 1e-15")

    def godunov_monotone():
        rng = np.random.default_rng(3)
        worst = 0.0
        for kind in ("linear", "burgers"):
            fam = FluxFamily(weighted_interval(), kind)
            a, b, q = rng.uniform(-1, 1, 2000), rng.uniform(-1, 1, 2000), rng.uniform(-1, 1, 2000)
            d = 1e-6
            ga = (fv.godunov_flux(fam, a + d, b, q) - fv.godunov_flux(fam, a, b, q)) / d
            gb = (fv.godunov_flux(fam, a, b + d, q) - fv.godunov_flux(fam, a, b, q)) / d
            worst = max(worst, float(np.max(-ga)), float(np.max(gb)))
        crit.add("Godunov flux nondecreasing in the left state and nonincreasing in the right", worst <= 1e-8,
                 "worst wrong-signed slope %.3g" % worst, "<= 1e-8")

    def per_scenario():
        worst_tvd = -np.inf
        for name in ENTROPY_PROBES:
            sc = shipped(name).scenario
            grid = sc.build_grid()
            u0 = sc.initial_field(grid).values
            adv = fv.AdvectionOperator(sc.flux, grid)
            levels = EntropyCheckConfig().levels(float(np.max(np.abs(u0))))
            stats = {"ent": -np.inf, "mass": 0.0, "lo": u0.min(), "hi": u0.max(), "tvd": -np.inf}
            flat = grid.dim == 1 and grid.geometry.metric_params.get("weight", "one") == "one"

            def stepper(u, t, dt):
                u_new, out = euler_update(adv, u, t, dt)
                stats["ent"] = max(stats["ent"], entropy_residuals_all_levels(adv, u, u_new, dt, t, levels))
                scale = max(1.0, abs(integrate(grid, u)))
                stats["mass"] = max(stats["mass"], abs(integrate(grid, u_new) - integrate(grid, u) + dt * out) / scale)
                stats["lo"], stats["hi"] = min(stats["lo"], u_new.min()), max(stats["hi"], u_new.max())
                if flat:
                    stats["tvd"] = max(stats["tvd"], total_variation(grid, u_new).tv_extended
                                       - total_variation(grid, u).tv_extended)
                return u_new, out

            fv.run_loop(sc, grid, u0, stepper)
            crit.add(f"{name} cell entropy inequality at 21 levels", stats["ent"] <= 1e-12,
                     "max residual %.3g" % stats["ent"], "<= 1e-12")
            crit.add(f"{name} mass change equals boundary flux", stats["mass"] <= 1e-12,
                     "max relative imbalance %.3g" % stats["mass"], "<= 1e-12")
            lo0, hi0 = min(u0.min(), 0.0), max(u0.max(), 0.0)
            crit.add(f"{name} range within data and boundary datum",
                     stats["lo"] >= lo0 - 1e-12 and stats["hi"] <= hi0 + 1e-12,
                     "u in [%.12g, %.12g]" % (stats["lo"], stats["hi"]),
                     "[%.6g, %.6g] +- 1e-12" % (lo0, hi0))
            if flat:
                worst_tvd = max(worst_tvd, stats["tvd"])
        crit.add("flat interval runs TVD in extended variation", worst_tvd <= 1e-12,
                 "max per-step increase %.3g" % worst_tvd, "<= 1e-12")

    def bln_refinement():
        base = shipped("shock_exit").scenario
        vals = []
        for n in (100, 200, 400):
            run = solve_hyperbolic(base.replace(resolution=(n,)), check_entropy=False)
            vals.append(max(float(np.max(b)) for b in run.bln[1:] if b is not None))
        crit.add("boundary residual vanishes under refinement", all(b < a for a, b in zip(vals, vals[1:])),
                 f"max over output times {_fmt(vals)} at N 100, 200, 400", "strictly decreasing")

    for name, fn in (("Godunov values", godunov_values), ("Godunov monotone", godunov_monotone),
                     ("scenario invariants", per_scenario), ("boundary residual", bln_refinement)):
        crit.guard(name, fn)


# -- contraction --------------------------------------------------------------

def contraction_checks(crit: Criterion):
    def order_preserving():
        for name in ("ac_6", "ac_6_band"):
            sc = shipped(name).scenario
            grid = sc.build_grid()
            ua = sc.initial_field(grid).values
            ub = ua + 0.3 * grid.sample(lambda z: smoothstep(np.abs(z[0] - np.mean(sc.geometry.transverse_range)) / 0.4)).values
            ub = np.clip(ub, None, 1.0)
            bound = float(max(np.max(np.abs(ua)), np.max(np.abs(ub))))
            ra = solve_hyperbolic(sc, grid, check_entropy=False, u0=ua, u_bound=bound).loop
            rb = solve_hyperbolic(sc, grid, check_entropy=False, u0=ub, u_bound=bound, dt_sequence=ra.dts).loop
            worst = max(float(np.max(a - b)) for a, b in zip(ra.snapshots, rb.snapshots))
            crit.add(f"{name} ordered data stay ordered", worst <= 1e-12, "max (u_a - u_b) %.3g" % worst, "<= 1e-12")

    crit.guard("order preservation", order_preserving)


# -- limit --------------------------------------------------------------------

def limit_checks(crit: Criterion):
    rng = np.random.default_rng(4)

    def tracer_roundtrip():
        worst = 0.0
        for name in ("ac_10", "ac_10_weighted", "ac_10_rotation", "ac_4_revolution"):
            sc = shipped(name).scenario
            tracer = CharacteristicTracer(sc.geometry, sc.flux)
            z = _random_points(sc.geometry, 200, rng, margin=0.0)
            t1 = 0.2
            fwd, out, _ = tracer.trace(z, 0.0, t1)
            keep = ~out
            back, out2, _ = tracer.trace(fwd[:, keep], t1, 0.0)
            d = np.abs(back - z[:, keep])
            if sc.geometry.dim == 2:
                d[1] = np.minimum(d[1], 2 * np.pi - d[1])
            worst = max(worst, float(np.max(d[:, ~out2])))
        crit.add("characteristics traced forward then back return home", worst <= 1e-8,
                 "max displacement %.3g" % worst, "<= 1e-8")

    def exact_solutions():
        x = rng.uniform(0.01, 0.99, 1000)
        t = rng.uniform(0.05, 1.5, 1000)
        d = 1e-6
        worst = 0.0
        for case in BURGERS_CASES:
            u = np.array([burgers_interval_exact(case, xi, ti) for xi, ti in zip(x, t)])
            ut = np.array([(burgers_interval_exact(case, xi, ti + d) - burgers_interval_exact(case, xi, ti - d)) / (2 * d)
                           for xi, ti in zip(x, t)])
            ux = np.array([(burgers_interval_exact(case, min(xi + d, 1), ti) - burgers_interval_exact(case, max(xi - d, 0), ti))
                           / (min(xi + d, 1) - max(xi - d, 0)) for xi, ti in zip(x, t)])
            smooth = np.abs(ut) + np.abs(ux) < 1e3   # drop samples straddling a jump or kink
            worst = max(worst, float(np.max(np.abs(ut + u * ux)[smooth])))
        crit.add("exact Burgers solutions solve the equation where smooth", worst <= 1e-4,
                 "max |u_t + u u_x| %.3g" % worst, "<= 1e-4")
        ts = np.linspace(0.05, 0.95, 50)
        pos = []
        for ti in ts:
            xs = np.linspace(0.5, 1.0, 20001)
            u = burgers_interval_exact("step-shock", xs, ti)
            pos.append(xs[np.argmax(u < 0.5)])
        speed = np.polyfit(ts, pos, 1)[0]
        crit.add("step-shock speed matches the jump condition", abs(speed - 0.5) <= 1e-4,
                 "fitted speed %.6g" % speed, "(1 + 0) / 2 within 1e-4")

    for name, fn in (("tracer", tracer_roundtrip), ("exact solutions", exact_solutions)):
        crit.guard(name, fn)


SUITE_CHECKS = {"geometry": geometry_checks, "trace": trace_checks, "viscous": viscous_checks,
                "entropy": entropy_checks, "contraction": contraction_checks, "limit": limit_checks}
SUITE_CRITERIA = {"geometry": (2,), "trace": (1, 12), "viscous": (4, 5, 11), "entropy": (3, 7, 8),
                  "contraction": (6,), "limit": (9, 10)}


def verify(suite: str, full: bool = True, cached: bool = False) -> Report:
    """Run one suite (or ``all``) and return its report."""
    if suite == "all":
        start = time.perf_counter()
        checks = []
        for s in SUITES:
            checks += verify(s, full, cached).checks
        return Report("all", checks, time.perf_counter() - start)
    if suite not in SUITE_CHECKS:
        raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES + ('all',)}")
    start = time.perf_counter()
    crit = Criterion(0, suite)
    SUITE_CHECKS[suite](crit)
    checks = list(crit.checks)
    # the geometry suite is cheap enough to include its criterion in the quick form
    if full or suite == "geometry":
        for n in SUITE_CRITERIA[suite]:
            checks += _from_criterion(n, cached)
    return Report(suite, checks, time.perf_counter() - start)
