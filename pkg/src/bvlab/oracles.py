"""
Reference solutions: backward characteristic tracing for linear flux, closed
forms for 1D Burgers on the unit interval, and the vanishing-viscosity
comparison against the hyperbolic solver.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .entropy_solver import solve_hyperbolic
from .geometry import ChartGeometry
from .grid import StructuredGrid, integrate, values_of
from .problem import FluxFamily, Scenario
from .viscous_solver import solve_viscous

BURGERS_CASES = ("shock-exit", "boundary-rarefaction", "step-shock")


class TracerError(RuntimeError):
    pass


@dataclass(frozen=True)
class CharacteristicTracer:
    """RK4 integration of dz/dtau = X(z, tau), vectorised over points.

    Leaving the transverse range is detected per RK4 step and located by
    bisection on the step fraction to ``exit_tol`` in chart coordinates.
    """
    geometry: ChartGeometry
    family: FluxFamily
    step: float = 2.5e-3
    exit_tol: float = 1e-10

    def _rk4(self, z, tau, dtau):
        X = self.family.direction
        k1 = X(z, tau)
        k2 = X(z + 0.5 * dtau * k1, tau + 0.5 * dtau)
        k3 = X(z + 0.5 * dtau * k2, tau + 0.5 * dtau)
        k4 = X(z + dtau * k3, tau + dtau)
        return z + dtau / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    def _outside(self, z):
        lo, hi = self.geometry.transverse_range
        return (z[0] < lo) | (z[0] > hi)

    def trace(self, z, t0: float, t1: float):
        """Follow characteristics from time t0 to t1 (either direction).

        Returns ``(z_end, exited, exit_time)``; exited paths stop at the
        boundary and report the time they reached it, others report nan.
        """
        z = np.array(np.atleast_2d(np.asarray(z, dtype=float).T).T, dtype=float)
        if z.shape[0] != self.geometry.dim:
            z = z.reshape(self.geometry.dim, -1)
        n = max(1, int(np.ceil(abs(t1 - t0) / self.step)))
        dtau = (t1 - t0) / n
        exited = np.zeros(z.shape[1:], dtype=bool)
        exit_time = np.full(z.shape[1:], np.nan)
        if np.any(self._outside(z)):
            raise TracerError("start point outside the domain")
        tau = t0
        for _ in range(n):
            live = ~exited
            if not np.any(live):
                break
            zl = z[:, live]
            new = self._rk4(zl, tau, dtau)
            if not np.all(np.isfinite(new)):
                raise TracerError("integrator produced non-finite values")
            out = self._outside(new)
            if np.any(out):
                lo_s = np.zeros(np.count_nonzero(out))
                hi_s = np.ones_like(lo_s)
                zo = zl[:, out]
                while np.max(hi_s - lo_s) * abs(dtau) * 10 > self.exit_tol:
                    mid = 0.5 * (lo_s + hi_s)
                    trial = self._rk4(zo, tau, mid * dtau)
                    bad = self._outside(trial)
                    hi_s = np.where(bad, mid, hi_s)
                    lo_s = np.where(bad, lo_s, mid)
                frac = 0.5 * (lo_s + hi_s)
                zb = self._rk4(zo, tau, frac * dtau)
                lo, hi = self.geometry.transverse_range
                zb[0] = np.clip(zb[0], lo, hi)
                new[:, out] = zb
                idx = np.flatnonzero(live)[out]
                exited.flat[idx] = True
                exit_time.flat[idx] = tau + frac * dtau
            z[:, live] = new
            tau = t0 + (_ + 1) * dtau
        return self.geometry.wrap(z), exited, exit_time

    def exit_time(self, z, t0: float = 0.0, t_max: float = 10.0):
        """Forward time at which the characteristic from (z, t0) reaches the boundary."""
        _, exited, te = self.trace(z, t0, t_max)
        return np.where(exited, te, np.inf)


def characteristic_solution(tracer: CharacteristicTracer, u0: Callable, z, t: float):
    """Linear transport with datum 0 on inflow: u0 at the foot, 0 if the path came from the boundary."""
    if tracer.family.h_kind != "linear":
        raise ValueError("characteristic oracle needs linear h")
    z = np.asarray(z, dtype=float)
    shape = z.shape[1:]
    zf = z.reshape(z.shape[0], -1)
    if t == 0:
        return np.asarray(u0(zf), dtype=float).reshape(shape)
    foot, exited, _ = tracer.trace(zf, t, 0.0)
    vals = np.where(exited, 0.0, u0(foot))
    return np.asarray(vals, dtype=float).reshape(shape)


def characteristic_oracle(scenario: Scenario, step: float = 2.5e-3):
    """Point function (z, t) -> exact value for a linear scenario with analytic initial data."""
    tracer = CharacteristicTracer(scenario.geometry, scenario.flux, step)
    u0 = scenario.u0.sampler(scenario.geometry)
    return lambda z, t: characteristic_solution(tracer, u0, z, t)


def burgers_interval_exact(case: str, x, t: float):
    """Entropy solutions of u_t + (u^2/2)_x = 0 on (0, 1) with boundary datum 0.

    shock-exit: u0 = 1. The inflow end opens a rarefaction fan x/t; the state
        1 leaves through the right end, and from t = 1 on u = x/t.
    boundary-rarefaction: u0 = -1. The fan (x - 1)/t opens at the right end;
        u = -1 ahead of it, and from t = 1 on u = (x - 1)/t.
    step-shock: u0 = 1 on x < 1/2, 0 beyond. Fan x/t behind a plateau of 1
        and a shock at 1/2 + t/2; fan and shock reach x = 1 together at t = 1.
    """
    x = np.asarray(x, dtype=float)
    if t < 0:
        raise ValueError("t must be >= 0")
    if np.any((x < 0) | (x > 1)):
        raise ValueError("x outside [0, 1]")
    if case == "shock-exit":
        if t == 0:
            return np.ones_like(x)
        return np.where(x < t, x / t, 1.0)
    if case == "boundary-rarefaction":
        if t == 0:
            return -np.ones_like(x)
        return np.where(x > 1.0 - t, (x - 1.0) / t, -1.0)
    if case == "step-shock":
        if t == 0:
            return np.where(x < 0.5, 1.0, 0.0)
        if t >= 1:
            return x / t
        return np.where(x < t, x / t, np.where(x < 0.5 + 0.5 * t, 1.0, 0.0))
    raise ValueError(f"unknown case {case!r}; expected one of {BURGERS_CASES}")


def burgers_oracle(case: str):
    return lambda z, t: burgers_interval_exact(case, np.asarray(z)[0], t)


def l1_error(grid: StructuredGrid, field, oracle: Callable, t: float) -> float:
    """sum |field - oracle(centre, t)| * cell volume."""
    u = values_of(grid, field)
    ref = np.broadcast_to(oracle(grid.centers, t), grid.shape)
    return integrate(grid, np.abs(u - ref))


def space_time_l1(grid: StructuredGrid, times: Sequence[float], fields_a, fields_b) -> float:
    """Trapezoid-in-time integral of the L1 distance between matched snapshots."""
    d = np.array([integrate(grid, np.abs(a - b)) for a, b in zip(fields_a, fields_b)])
    return float(np.trapezoid(d, np.asarray(times)))


@dataclass(frozen=True)
class LimitRow:
    eps: float
    l1_distance: float
    fitted_rate: float


def viscosity_limit_study(scenario: Scenario, eps_list: Sequence[float], cadence: int = 16):
    """Space-time L1 distance between each viscous run and the hyperbolic run.

    Snapshots are matched at ``cadence`` uniform output times. The fitted rate
    is the least-squares slope of log distance against log sqrt(eps) over the
    positive entries; it is repeated on every row.
    """
    eps_list = [float(e) for e in eps_list]
    if any(b > a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps list must be decreasing")
    base = scenario.replace(viscosity=0.0, cadence=cadence)
    grid = base.build_grid()
    ref = solve_hyperbolic(base, grid, check_entropy=False, keep_trajectory=False)
    ref_fields, times = _snapshots(ref.loop, base)
    dists = []
    for eps in eps_list:
        if eps == 0:
            dists.append(0.0)
            continue
        run = solve_viscous(base.replace(viscosity=eps), grid)[2]
        fields, _ = _snapshots(run, base)
        dists.append(space_time_l1(grid, times, fields, ref_fields))
    pos = [(e, d) for e, d in zip(eps_list, dists) if e > 0 and d > 0]
    rate = float("nan")
    if len(pos) >= 2:
        e, d = np.array(pos).T
        rate = float(np.polyfit(np.log(np.sqrt(e)), np.log(d), 1)[0])
    return [LimitRow(e, d, rate) for e, d in zip(eps_list, dists)]


def _snapshots(loop, scenario):
    """Fields at the output times; run_loop keeps them on the records only as summaries."""
    return loop.snapshots, scenario.output_times()
