"""
Finite-volume building blocks shared by the viscous and hyperbolic solvers:
the Godunov flux, the advective operator with exterior state 0, series
records and the output-time loop.
"""

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .bv_trace import extract_trace, total_variation
from .grid import StructuredGrid, divergence_of_face_fluxes, face_normal_flux, integrate
from .problem import FluxFamily, Scenario, stable_dt

GROWTH_LIMIT = 1.10  # abort when |u|_inf exceeds 110% of the initial bound


class InstabilityError(RuntimeError):
    """Raised when the sup norm grows beyond the detector threshold."""

    def __init__(self, message, t=None, step=None, linf=None):
        super().__init__(message)
        self.t, self.step, self.linf = t, step, linf


def godunov_flux(family: FluxFamily, a, b, q):
    """Godunov flux of s -> q h(s) between left state a and right state b.

    Minimum of the face flux over [a, b] when a <= b, maximum over [b, a]
    otherwise. Candidates are the endpoints and the critical points of h.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    fa, fb = q * family.h(a), q * family.h(b)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    fmin, fmax = np.minimum(fa, fb), np.maximum(fa, fb)
    for c in family.critical_points:
        inside = (lo <= c) & (c <= hi)
        fc = q * family.h(c)
        fmin = np.where(inside, np.minimum(fmin, fc), fmin)
        fmax = np.where(inside, np.maximum(fmax, fc), fmax)
    return np.where(a <= b, fmin, fmax)


class AdvectionOperator:
    """Godunov face fluxes of h(u) X on a grid; boundary faces see exterior state ``ghost``."""

    def __init__(self, family: FluxFamily, grid: StructuredGrid):
        self.family = family
        self.grid = grid
        unit = dataclasses.replace(family, a=1.0, a_mode="constant")
        self.qt_unit = face_normal_flux(grid, lambda z: unit.direction(z, 0.0))[0]
        self.qp = face_normal_flux(grid, lambda z: family.direction(z, 0.0))[1] if grid.dim == 2 else None

    def face_speeds(self, t: float):
        return self.family.amplitude(t) * self.qt_unit, self.qp

    def fluxes(self, u: np.ndarray, t: float, ghost: float = 0.0):
        qt, qp = self.face_speeds(t)
        pad = np.full((1,) + u.shape[1:], ghost)
        left = np.concatenate([pad, u], axis=0)
        right = np.concatenate([u, pad], axis=0)
        ft = godunov_flux(self.family, left, right, qt)
        fp = None
        if qp is not None:
            fp = godunov_flux(self.family, u, np.roll(u, -1, axis=1), qp)
        return ft, fp

    def divergence(self, u: np.ndarray, t: float):
        """(div of the numerical flux per cell, total outflow through the boundary)."""
        ft, fp = self.fluxes(u, t)
        return divergence_of_face_fluxes(self.grid, ft, fp), float(np.sum(ft[-1]) - np.sum(ft[0]))

    def entropy_fluxes(self, u: np.ndarray, t: float, k: float):
        """Crandall-Majda flux Q(a, b) = F(a v k, b v k) - F(a ^ k, b ^ k), exterior state 0."""
        hi_t, hi_p = self.fluxes(np.maximum(u, k), t, ghost=max(0.0, k))
        lo_t, lo_p = self.fluxes(np.minimum(u, k), t, ghost=min(0.0, k))
        return hi_t - lo_t, (None if hi_p is None else hi_p - lo_p)


@dataclass
class SeriesRecord:
    t: float
    linf: float
    tv_jump: float
    tv_gradient: float
    tv_extended: float
    dudt_l1: float              # max over the steps since the previous record
    mass: float
    mass_flux_boundary: float   # cumulative outflow through the boundary since t = 0
    trace_min: float = float("nan")
    trace_max: float = float("nan")
    entropy_cell_resid_max: float = float("nan")
    bln_resid_max: float = float("nan")
    step: int = 0

    COLUMNS = ("t", "linf", "tv_jump", "tv_gradient", "tv_extended", "dudt_l1", "mass",
               "mass_flux_boundary", "trace_min", "trace_max", "entropy_cell_resid_max",
               "bln_resid_max", "step")

    def row(self):
        return [getattr(self, c) for c in self.COLUMNS]


def make_record(grid: StructuredGrid, u: np.ndarray, t: float, step: int, dudt: float,
                outflow: float, trace=None) -> SeriesRecord:
    tv = total_variation(grid, u)
    rec = SeriesRecord(t=t, linf=float(np.max(np.abs(u))), tv_jump=tv.tv_jump,
                       tv_gradient=tv.tv_gradient, tv_extended=tv.tv_extended, dudt_l1=dudt,
                       mass=integrate(grid, u), mass_flux_boundary=outflow, step=step)
    if trace is not None:
        rec.trace_min, rec.trace_max = float(np.min(trace.values)), float(np.max(trace.values))
    return rec


def safe_trace(grid: StructuredGrid, u: np.ndarray):
    """Boundary trace, or None on grids too coarse for the ball averages."""
    if grid.shape[0] < 16:
        return None
    return extract_trace(grid, u)


@dataclass
class LoopResult:
    u: np.ndarray
    t: float
    steps: int
    records: List[SeriesRecord]
    traces: list
    trajectory: Optional[list] = None     # (t, u) after every step when requested
    dts: List[float] = field(default_factory=list)
    snapshots: List[np.ndarray] = field(default_factory=list)   # u at every output time


def run_loop(scenario: Scenario, grid: StructuredGrid, u0: np.ndarray,
             stepper: Callable, u_bound: Optional[float] = None, on_step: Optional[Callable] = None,
             keep_trajectory: bool = False, dt_sequence: Optional[List[float]] = None) -> LoopResult:
    """March u0 to the horizon, recording at the scenario's output times.

    ``stepper(u, t, dt)`` returns ``(u_new, boundary_outflow)``. The step is
    the stable step for the invariant range [-|u0|_inf, |u0|_inf] (widened to
    ``u_bound`` if given), shortened to land on each output time. ``on_step``
    receives ``(u_old, u_new, t, dt)`` and may return a residual to track.
    A fixed ``dt_sequence`` replaces the adaptive choice (paired runs).
    """
    bound = float(np.max(np.abs(u0))) if u_bound is None else float(u_bound)
    u_range = (-bound, bound)
    dt_base = stable_dt(scenario, grid, 0.0, u_range)
    t, step, u = 0.0, 0, np.array(u0, dtype=float)
    outflow, dudt_max, resid_max = 0.0, 0.0, -np.inf
    times = scenario.output_times()
    first_trace = safe_trace(grid, u)
    records = [make_record(grid, u, 0.0, 0, 0.0, 0.0, first_trace)]
    traces = [first_trace]
    trajectory = [(0.0, u.copy())] if keep_trajectory else None
    dts = []
    snapshots = [u.copy()]
    limit = GROWTH_LIMIT * max(bound, 1e-300)
    for t_out in times[1:]:
        while t < t_out - 1e-14 * max(1.0, t_out):
            if dt_sequence is not None:
                dt = dt_sequence[step]
            else:
                dt = min(dt_base, t_out - t)
                if t_out - t - dt < 1e-9 * dt:
                    dt = t_out - t
            u_new, out = stepper(u, t, dt)
            linf = float(np.max(np.abs(u_new)))
            if not np.isfinite(linf) or linf > limit:
                raise InstabilityError(f"sup norm {linf:.4g} exceeds {limit:.4g} at t={t + dt:.6g}, step {step + 1}",
                                       t + dt, step + 1, linf)
            if on_step is not None:
                r = on_step(u, u_new, t, dt)
                if r is not None:
                    resid_max = max(resid_max, r)
            dudt_max = max(dudt_max, integrate(grid, np.abs(u_new - u)) / dt)
            outflow += out * dt
            u, t, step = u_new, t + dt, step + 1
            dts.append(dt)
            if keep_trajectory:
                trajectory.append((t, u.copy()))
        t = t_out if abs(t - t_out) < 1e-12 * max(1.0, t_out) else t
        tr = safe_trace(grid, u)
        rec = make_record(grid, u, t, step, dudt_max, outflow, tr)
        if resid_max > -np.inf:
            rec.entropy_cell_resid_max = resid_max
        records.append(rec)
        traces.append(tr)
        snapshots.append(u.copy())
        dudt_max, resid_max = 0.0, -np.inf
    return LoopResult(u, t, step, records, traces, trajectory, dts, snapshots)
