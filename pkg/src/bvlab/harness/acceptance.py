"""
The twelve acceptance criteria as executable checks.

Each ``acN()`` returns a :class:`Criterion` holding named checks with the
measured value and the threshold it was held to. The verify suites and the
acceptance tests both run these functions.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, List

import numpy as np

from ..bv_trace import (compose_trace_check, cutoff_pairing, extract_trace, total_variation,
                        trace_formula_residual, tv_jump)
from ..entropy_solver import (EntropyCheckConfig, bln_residual, entropy_residual_weak,
                              euler_update, l1_contraction_check, solve_hyperbolic)
from ..fv import AdvectionOperator, run_loop
from ..geometry import commutator_residual_at
from ..grid import build_grid, integrate, smoothstep
from ..oracles import (burgers_oracle, characteristic_oracle, l1_error, viscosity_limit_study)
from ..problem import FluxFamily, Scenario, mollify_initial
from ..viscous_solver import ViscousOperator, fit_tv_envelope, solve_viscous, time_derivative_l1
from .config import shipped, shipped_configs
from .runner import h21_surrogate

EPS_LIST = (0.1, 0.05, 0.025)
FIT_MARGIN = 1.2   # constants fitted at the largest eps carry a 20% margin
TWIN_VISCOSITY = 0.05
ROTATION_C = 1.0   # rotation error bound C h T, h the widest azimuthal cell


@dataclass
class Check:
    name: str
    passed: bool
    measured: str
    threshold: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.measured} (required: {self.threshold})"


@dataclass
class Criterion:
    number: int
    title: str
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, name, passed, measured, threshold):
        self.checks.append(Check(name, bool(passed), measured, threshold))

    def guard(self, name: str, fn: Callable):
        """Run fn(); an exception becomes a failed check instead of aborting the criterion."""
        try:
            fn()
        except Exception as exc:  # noqa: BLE001 - reported, not swallowed
            self.add(name, False, f"raised {type(exc).__name__}: {exc}", "no exception")

    def summary(self) -> str:
        n_ok = sum(c.passed for c in self.checks)
        return f"AC{self.number} {'PASS' if self.passed else 'FAIL'}: {self.title} ({n_ok}/{len(self.checks)} checks)"


def _orders(values):
    v = np.asarray(values, dtype=float)
    return np.log2(v[:-1] / v[1:])


def _fmt(seq):
    return "[" + ", ".join("%.4g" % x for x in seq) + "]"


def _band_grid(cfg, n0, n1=8):
    return build_grid(cfg.scenario.geometry, (n0, n1))


# -- AC1 ----------------------------------------------------------------------

def ac1(levels=(32, 64, 128)) -> Criterion:
    crit = Criterion(1, "trace formula converges on the band")
    cfg = shipped("ac_1")
    u0 = cfg.scenario.u0.sampler(cfg.scenario.geometry)

    def X(z):
        return np.stack([np.ones_like(z[0]), np.zeros_like(z[1])])

    def body():
        smooth = []
        for n in levels:
            g = _band_grid(cfg, n)
            smooth.append(trace_formula_residual(g, g.sample(u0), X, "smooth"))
        o = _orders(smooth)
        crit.add("smooth field order", np.all(o >= 1.7), f"residuals {_fmt(smooth)}, orders {_fmt(o)}",
                 "every order >= 1.7")
        pw = []
        for n in levels:
            g = _band_grid(cfg, n)
            pw.append(trace_formula_residual(g, g.sample(lambda z: (z[0] > 1.1) * 1.0), X, "piecewise"))
        o = _orders(pw)
        crit.add("piecewise-constant field order", np.all(o >= 0.9), f"residuals {_fmt(pw)}, orders {_fmt(o)}",
                 "every order >= 0.9")

    crit.guard("trace formula", body)
    return crit


# -- AC2 ----------------------------------------------------------------------

def ac2() -> Criterion:
    crit = Criterion(2, "curvature commutator identity")

    def body():
        band = shipped("ac_2").scenario.geometry
        z = np.array([np.pi / 3, 0.5])
        steps = (1e-2, 5e-3, 2.5e-3)
        res = [commutator_residual_at(band, lambda y: np.cos(y[0]), z, h) for h in steps]
        ratios = np.array(res[:-1]) / np.array(res[1:])
        crit.add("band residual halves per step halving", np.all(ratios >= 2.0),
                 f"residuals {_fmt(res)}, ratios {_fmt(ratios)}", "every ratio >= 2")
        rng = np.random.default_rng(0)
        for name in ("ac_2_interval", "ac_2_cylinder"):
            geom = shipped(name).scenario.geometry
            lo, hi = geom.transverse_range
            pts = [rng.uniform(lo + 0.05, hi - 0.05, 32)]
            if geom.dim == 2:
                pts.append(rng.uniform(0, 2 * np.pi, 32))
            r = max(commutator_residual_at(geom, lambda y: np.sin(y[0]) * np.exp(0.3 * y[0]), z, 1e-3)
                    for z in np.stack(pts, axis=1))
            crit.add(f"flat geometry {geom.kind}", r <= 1e-8, "max residual %.3g" % r, "<= 1e-8 at fd_step 1e-3")

    crit.guard("commutator", body)
    return crit


# -- shared all-scenario runs (AC3, AC7) --------------------------------------

@dataclass
class ScenarioRun:
    name: str
    solver: str
    u0_sup: float
    linf_max: float
    entropy_max: float = float("nan")
    error: str = ""


def _twin(sc: Scenario) -> Scenario:
    if sc.viscosity > 0:
        return sc.replace(viscosity=0.0)
    return sc.replace(viscosity=TWIN_VISCOSITY)


def _run_one(name: str, sc: Scenario) -> ScenarioRun:
    grid = sc.build_grid()
    sup0 = float(np.max(np.abs(sc.initial_field(grid).values)))
    try:
        if sc.viscosity > 0:
            _, series, _ = solve_viscous(sc, grid)
            return ScenarioRun(name, "viscous", sup0, max(r.linf for r in series))
        run = solve_hyperbolic(sc, grid, check_entropy=True)
        ent = max(r.entropy_cell_resid_max for r in run.series[1:])
        return ScenarioRun(name, "hyperbolic", sup0, max(r.linf for r in run.series), ent)
    except Exception as exc:  # noqa: BLE001
        return ScenarioRun(name, "viscous" if sc.viscosity > 0 else "hyperbolic", sup0, np.inf, np.inf,
                           f"{type(exc).__name__}: {exc}")


@lru_cache(maxsize=1)
def all_scenario_runs():
    """Every shipped scenario as configured plus its twin in the other regime."""
    runs = []
    for path in shipped_configs():
        sc = shipped(path.name).scenario
        runs.append(_run_one(path.stem, sc))
        runs.append(_run_one(path.stem + " (twin)", _twin(sc)))
    return tuple(runs)


def ac3() -> Criterion:
    crit = Criterion(3, "maximum principle in every shipped scenario")

    def body():
        for r in all_scenario_runs():
            ok = r.linf_max <= r.u0_sup + 1e-8 and not r.error
            crit.add(f"{r.name} [{r.solver}]", ok,
                     r.error or "max |u| %.12g vs |u0| %.12g" % (r.linf_max, r.u0_sup), "max |u| <= |u0| + 1e-8")

    crit.guard("maximum principle", body)
    return crit


# -- AC4 ----------------------------------------------------------------------

def _stepper(sc: Scenario, grid):
    if sc.viscosity > 0:
        return ViscousOperator(sc, grid).heun
    adv = AdvectionOperator(sc.flux, grid)
    return lambda u, t, dt: euler_update(adv, u, t, dt)


def tv_history(sc: Scenario, per_step: bool = True):
    """(times, tv_extended per record, max per-step increase of tv_extended or None)."""
    grid = sc.build_grid()
    u0 = sc.initial_field(grid).values
    if sc.viscosity > 0:
        u0 = mollify_initial(grid, u0, sc.viscosity, sc.mollifier).values
    worst = [-np.inf]
    prev = [total_variation(grid, u0).tv_extended]

    def on_step(a, b, t, dt):
        tv = total_variation(grid, b).tv_extended
        worst[0] = max(worst[0], tv - prev[0])
        prev[0] = tv

    res = run_loop(sc, grid, u0, _stepper(sc, grid), on_step=on_step if per_step else None)
    return [r.t for r in res.records], [r.tv_extended for r in res.records], worst[0] if per_step else None


def ac4(factors=(1, 2, 4)) -> Criterion:
    crit = Criterion(4, "total variation control")

    def tvd():
        for name in ("ac_4", "ac_4_linear"):
            base = shipped(name).scenario
            for sc in (base, base.replace(viscosity=TWIN_VISCOSITY)):
                _, _, inc = tv_history(sc)
                label = "viscous" if sc.viscosity > 0 else "hyperbolic"
                crit.add(f"{name} [{label}] TVD", inc <= 1e-12, "max step increase %.3g" % inc, "<= 1e-12 per step")

    def envelope():
        for name in ("ac_4_weighted", "ac_4_band", "ac_4_revolution", "ac_4_viscous"):
            base = shipped(name).scenario
            cs = []
            for f in factors:
                # N counts transverse cells; the azimuthal count stays fixed
                res = (base.resolution[0] * f,) + tuple(base.resolution[1:])
                t, tv, _ = tv_history(base.replace(resolution=res), per_step=False)
                cs.append(fit_tv_envelope(t, tv, tv[0]))
            c0 = cs[0]
            ok = all(abs(c - c0) <= 0.2 * c0 for c in cs[1:])
            ns = [base.resolution[0] * f for f in factors]
            crit.add(f"{name} envelope constant stable", ok, f"c at N={ns}: {_fmt(cs)}", "within 20%% of the N=%d fit" % ns[0])

    crit.guard("TVD", tvd)
    crit.guard("envelope", envelope)
    return crit


# -- AC5 ----------------------------------------------------------------------

def ac5(resolutions=(200, 400)) -> Criterion:
    crit = Criterion(5, "time derivative bounded by initial variation")

    def body():
        for name in ("ac_5", "ac_5_burgers"):
            base = shipped(name).scenario
            ratios = {}
            for n in resolutions:
                for eps in EPS_LIST:
                    sc = base.replace(viscosity=eps, resolution=(n,))
                    grid = sc.build_grid()
                    tv0 = tv_jump(grid, sc.initial_field(grid))
                    ratios[(n, eps)] = time_derivative_l1(solve_viscous(sc, grid)[1]) / tv0
            c1 = FIT_MARGIN * ratios[(resolutions[0], EPS_LIST[0])]
            worst = max(ratios.values())
            crit.add(f"{name} single c1", worst <= c1,
                     "c1 = %.4g, ratios %s" % (c1, _fmt(list(ratios.values()))),
                     "every max |du/dt|_L1 / tv(u0) <= c1")

    crit.guard("time derivative", body)
    return crit


# -- AC6 ----------------------------------------------------------------------

def ac6() -> Criterion:
    crit = Criterion(6, "L1 contraction of paired runs")

    def body():
        pairs = []
        sc = shipped("ac_6").scenario
        g = sc.build_grid()
        u = sc.initial_field(g).values
        pairs.append(("ac_6 u0 vs u0/2", sc, u, 0.5 * u))
        pairs.append(("ac_6 u0 vs step", sc, u, g.sample(lambda z: np.where(z[0] < 0.5, -0.5, 0.8)).values))
        sb = shipped("ac_6_band").scenario
        gb = sb.build_grid()
        ub = sb.initial_field(gb).values
        pairs.append(("ac_6_band box vs shifted wave", sb, ub,
                      gb.sample(lambda z: 0.6 * np.sin(z[1]) * smoothstep(np.abs(z[0] - 1.1) / 0.3)).values))
        pairs.append(("ac_6 identical data", sc, u, u.copy()))
        for label, s, a, b in pairs:
            d = l1_contraction_check(s, a, b)
            inc = float(np.max(np.diff(d)))
            crit.add(label, inc <= 1e-10, "distances %s, max increase %.3g" % (_fmt(d), inc),
                     "non-increasing within 1e-10")

    crit.guard("contraction", body)
    return crit


# -- AC7 ----------------------------------------------------------------------

def ac7(levels=(200, 400)) -> Criterion:
    crit = Criterion(7, "discrete entropy inequality")

    def cells():
        for r in all_scenario_runs():
            if r.solver != "hyperbolic":
                continue
            crit.add(f"{r.name} cell residual", r.entropy_max <= 1e-12 and not r.error,
                     r.error or "max over steps and 21 levels %.3g" % r.entropy_max, "<= 1e-12")

    def weak():
        for name in ("ac_7", "ac_7_step"):
            base = shipped(name).scenario
            vals = []
            for n in levels:
                sc = base.replace(resolution=(n,))
                grid = sc.build_grid()
                run = solve_hyperbolic(sc, grid, keep_trajectory=True, check_entropy=False)
                vals.append(entropy_residual_weak(grid, sc.flux, run.loop.trajectory, EntropyCheckConfig()))
            ok = vals[0] >= -5e-3 and all(b > a for a, b in zip(vals, vals[1:]))
            crit.add(f"{name} weak residual", ok, f"min over (k, phi) at N={list(levels)}: {_fmt(vals)}",
                     ">= -5e-3 at N=%d and increasing under refinement" % levels[0])

    crit.guard("cell entropy", cells)
    crit.guard("weak entropy", weak)
    return crit


# -- AC8 ----------------------------------------------------------------------

def ac8(levels=(100, 200, 400)) -> Criterion:
    crit = Criterion(8, "boundary condition residual")

    def body():
        base = shipped("ac_8").scenario
        per_side = []
        for n in levels:
            run = solve_hyperbolic(base.replace(resolution=(n,)), check_entropy=False)
            b = run.bln[-1]
            side = run.state.grid.boundary.side
            per_side.append((float(np.max(b[side < 0])), float(np.max(b[side > 0]))))
        left, right = zip(*per_side)
        fine = per_side[-1]
        crit.add("residual at N=%d, t=%g" % (levels[-1], base.horizon), max(fine) <= 0.05,
                 "inflow end %.3g, outflow end %.3g" % fine, "<= 0.05 on both ends")
        mx = [max(p) for p in per_side]
        dec = all(b < a for a, b in zip(mx, mx[1:]))
        nonincr = all(b <= a for s in (left, right) for a, b in zip(s, s[1:]))
        crit.add("residual decreases under refinement", dec and nonincr,
                 f"inflow end {_fmt(left)}, outflow end {_fmt(right)}",
                 "max strictly decreasing, each end non-increasing")
        fam = FluxFamily(base.geometry, "burgers")
        v = bln_residual(fam, -1.0, 1.0)
        crit.add("violation example Tu=-1 at outflow end", abs(v - 0.5) <= 1e-6, "%.12g" % v, "0.5 +- 1e-6")

    crit.guard("boundary condition", body)
    return crit


# -- AC9 ----------------------------------------------------------------------

def ac9() -> Criterion:
    crit = Criterion(9, "vanishing viscosity limit")

    def body():
        for name in ("ac_9", "ac_9_band"):
            sc = shipped(name).scenario
            rows = viscosity_limit_study(sc, EPS_LIST, cadence=sc.cadence)
            d = [r.l1_distance for r in rows]
            crit.add(f"{name} distance decreasing", all(b < a for a, b in zip(d, d[1:])),
                     f"space-time L1 distances {_fmt(d)}", "strictly decreasing in eps")
        sc = shipped("ac_9_linear").scenario
        rows = viscosity_limit_study(sc, EPS_LIST, cadence=sc.cadence)
        rate = rows[0].fitted_rate
        crit.add("ac_9_linear rate in sqrt(eps)", rate >= 0.4,
                 "rate %.4g, distances %s" % (rate, _fmt([r.l1_distance for r in rows])), ">= 0.4")

    crit.guard("viscosity limit", body)
    return crit


# -- AC10 ---------------------------------------------------------------------

def oracle_errors(name: str, factors=(1, 2, 4)):
    base = shipped(name).scenario
    errs = []
    for f in factors:
        sc = base.refined(f)
        run = solve_hyperbolic(sc, check_entropy=False)
        if sc.oracle == "characteristic":
            oracle = characteristic_oracle(sc)
        else:
            oracle = burgers_oracle(sc.oracle)
        errs.append(l1_error(run.state.grid, run.state.u, oracle, sc.horizon))
    return errs


def ac10() -> Criterion:
    crit = Criterion(10, "convergence to reference solutions")

    def body():
        for name, need in (("ac_10", 0.8), ("ac_10_weighted", 0.8), ("ac_10_shock", 0.5)):
            errs = oracle_errors(name)
            o = _orders(errs)
            crit.add(f"{name} L1 order", np.all(o >= need), f"errors {_fmt(errs)}, orders {_fmt(o)}",
                     "every order >= %g" % need)
        base = shipped("ac_10_rotation").scenario
        oracle_u0 = base.u0.sampler(base.geometry)
        errs = []
        for f in (1, 2, 4):
            sc = base.replace(resolution=(base.resolution[0], base.resolution[1] * f))
            run = solve_hyperbolic(sc, check_entropy=False)
            grid = run.state.grid
            err = l1_error(grid, run.state.u, lambda z, t: oracle_u0(z), sc.horizon)
            # transport is purely azimuthal, so h is the widest azimuthal cell
            h = float(np.max(base.geometry.radius(grid.edges0))) * grid.dz[1]
            bound = ROTATION_C * h * sc.horizon
            errs.append(err)
            crit.add(f"band rotation, {sc.resolution[1]} azimuthal cells", err <= bound,
                     "L1 error after one period %.4g" % err, "<= C h T = %.4g with C = %g" % (bound, ROTATION_C))
        o = _orders(errs)
        crit.add("band rotation first order", np.all(o >= 0.8), f"orders {_fmt(o)}", "every order >= 0.8")

    crit.guard("oracle convergence", body)
    return crit


# -- AC11 ---------------------------------------------------------------------

def ac11() -> Criterion:
    crit = Criterion(11, "mollified initial data")

    def body():
        for name in ("ac_11", "ac_11_revolution"):
            sc = shipped(name).scenario
            grid = sc.build_grid()
            u0 = sc.initial_field(grid).values
            sup0, tv0 = float(np.max(np.abs(u0))), tv_jump(grid, u0)
            l1d, tvd, h21 = [], [], []
            sup_ok = True
            for eps in EPS_LIST:
                ue = mollify_initial(grid, u0, eps, sc.mollifier).values
                sup_ok &= float(np.max(np.abs(ue))) <= sup0
                l1d.append(integrate(grid, np.abs(ue - u0)))
                tvd.append(abs(tv_jump(grid, ue) - tv0))
                h21.append(h21_surrogate(grid, ue, eps) / tv0)
            crit.add(f"{name} sup bound", sup_ok, "exact clamp", "|u0e|_inf <= |u0|_inf")
            crit.add(f"{name} L1 distance monotone", all(b < a for a, b in zip(l1d, l1d[1:])),
                     f"{_fmt(l1d)} over eps {list(EPS_LIST)}", "strictly decreasing")
            crit.add(f"{name} TV distance monotone", all(b < a for a, b in zip(tvd, tvd[1:])),
                     f"{_fmt(tvd)}", "strictly decreasing")
            c0 = FIT_MARGIN * h21[0]
            crit.add(f"{name} H21 surrogate bounded", max(h21) <= c0,
                     "c0 = %.4g, ratios %s" % (c0, _fmt(h21)), "every ratio <= c0")
            rel = tvd[-1] / tv0
            crit.add(f"{name} TV within 2% at eps={EPS_LIST[-1]}", rel <= 0.02, "%.3g" % rel, "<= 0.02")

    crit.guard("mollifier", body)
    return crit


# -- AC12 ---------------------------------------------------------------------

def outward_unit_field(geom):
    """Transverse field equal to the outward unit normal near both boundary circles."""
    lo, hi = geom.transverse_range

    def X(z):
        s = (np.asarray(z[0]) - lo) / (hi - lo)
        psi = 1.0 - 2.0 * smoothstep((s - 0.3) / 0.4)
        return np.stack([psi, np.zeros_like(psi)])
    return X


def ac12(levels=(64, 128, 256)) -> Criterion:
    crit = Criterion(12, "trace properties")

    def body():
        cfg = shipped("ac_12")
        geom = cfg.scenario.geometry
        rng = np.random.default_rng(1)
        fields = {"cos": lambda g: g.sample(lambda z: np.cos(z[0])).values,
                  "box": lambda g: g.sample(lambda z: ((z[0] > 0.8) & (z[0] < 1.3)) * 1.0).values,
                  "random": lambda g: rng.uniform(-1, 1, g.shape),
                  "boundary max": lambda g: g.sample(lambda z: 1.0 - (z[0] - geom.transverse_range[0]) ** 2).values}
        g = build_grid(geom, (levels[1], 8))
        for name, make in fields.items():
            u = make(g)
            tr = extract_trace(g, u)
            crit.add(f"boundedness, {name} field", np.max(np.abs(tr.values)) <= np.max(np.abs(u)),
                     "|Tu|_inf %.12g, |u|_inf %.12g" % (np.max(np.abs(tr.values)), np.max(np.abs(u))), "|Tu|_inf <= |u|_inf")
        comp, hs = [], []
        for n in levels:
            gg = build_grid(geom, (n, 8))
            comp.append(compose_trace_check(gg, gg.sample(lambda z: np.cos(z[0])), lambda v: v * v))
            hs.append(gg.dz[0])
        ratios = np.array(comp[:-1]) / np.array(comp[1:])
        ok = all(c <= h for c, h in zip(comp, hs)) and np.all(ratios >= 2.0)
        crit.add("composition T[u^2] vs (Tu)^2", ok, f"{_fmt(comp)} with h {_fmt(hs)}",
                 "<= C h with C = 1, halving under refinement")
        gg = build_grid(geom, (levels[-1], 8))
        lo, hi = geom.transverse_range
        exact = 2 * np.pi * (np.sin(lo) + np.sin(hi))
        v = cutoff_pairing(gg, gg.sample(lambda z: np.ones_like(z[0])), outward_unit_field(geom), 0.05)
        rel = abs(v - exact) / exact
        crit.add("cutoff pairing at delta=0.05", rel <= 0.02, "%.6g vs boundary integral %.6g (rel %.3g)" % (v, exact, rel),
                 "relative error <= 0.02")

    crit.guard("trace properties", body)
    return crit


CRITERIA = {1: ac1, 2: ac2, 3: ac3, 4: ac4, 5: ac5, 6: ac6, 7: ac7, 8: ac8, 9: ac9, 10: ac10, 11: ac11, 12: ac12}


@lru_cache(maxsize=None)
def run_criterion(n: int) -> Criterion:
    """Criterion n, computed once per process."""
    return CRITERIA[n]()
