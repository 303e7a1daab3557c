"""
Explicit method-of-lines solver for the parabolic regularisation
du/dt + div_g f(u) = eps Laplace_g u with homogeneous Dirichlet data.
"""

from dataclasses import dataclass
from typing import List

import numpy as np

from .fv import AdvectionOperator, InstabilityError, LoopResult, SeriesRecord, run_loop
from .grid import CellField, StructuredGrid, divergence_of_face_fluxes, laplace_face_fluxes
from .problem import Scenario, mollify_initial

__all__ = ["ViscousState", "SeriesRecord", "InstabilityError", "ViscousOperator", "step_viscous",
           "solve_viscous", "time_derivative_l1"]


@dataclass
class ViscousState:
    t: float
    u: CellField
    grid: StructuredGrid
    scenario: Scenario


class ViscousOperator:
    """Right-hand side -div(Godunov flux) + eps * Laplace with the odd Dirichlet ghost."""

    def __init__(self, scenario: Scenario, grid: StructuredGrid):
        self.eps = scenario.viscosity
        self.grid = grid
        self.advection = AdvectionOperator(scenario.flux, grid)

    def rhs(self, u: np.ndarray, t: float):
        div, out = self.advection.divergence(u, t)
        ft, fp = laplace_face_fluxes(self.grid, u)
        lap = divergence_of_face_fluxes(self.grid, ft, fp)
        # diffusive outflow through the boundary is -eps * (grad u . n)
        out_diff = -self.eps * float(np.sum(ft[-1]) - np.sum(ft[0]))
        return -div + self.eps * lap, out + out_diff

    def heun(self, u: np.ndarray, t: float, dt: float):
        k1, o1 = self.rhs(u, t)
        u1 = u + dt * k1
        k2, o2 = self.rhs(u1, t + dt)
        return 0.5 * (u + u1 + dt * k2), 0.5 * (o1 + o2)


def step_viscous(state: ViscousState, dt: float) -> ViscousState:
    """One Heun step; both stages are monotone forward-Euler steps under stable_dt."""
    op = ViscousOperator(state.scenario, state.grid)
    u = state.u.values
    u_new, _ = op.heun(u, state.t, dt)
    bound = float(np.max(np.abs(u)))
    linf = float(np.max(np.abs(u_new)))
    if not np.isfinite(linf) or (bound > 0 and linf > 1.1 * bound) or (bound == 0 and linf > 0):
        raise InstabilityError(f"sup norm grew from {bound:.4g} to {linf:.4g}", state.t + dt, None, linf)
    return ViscousState(state.t + dt, CellField(u_new, state.grid), state.grid, state.scenario)


def solve_viscous(scenario: Scenario, grid: StructuredGrid = None, keep_trajectory: bool = False,
                  mollify: bool = True):
    """Mollify the initial data and march to the horizon.

    Returns ``(final state, series records, loop result)``; the loop result
    carries traces, step sizes and (optionally) every intermediate field.
    """
    if scenario.viscosity <= 0:
        raise ValueError("solve_viscous needs viscosity > 0")
    grid = scenario.build_grid() if grid is None else grid
    u0 = scenario.initial_field(grid)
    if mollify:
        u0 = mollify_initial(grid, u0, scenario.viscosity, scenario.mollifier)
    op = ViscousOperator(scenario, grid)
    res: LoopResult = run_loop(scenario, grid, u0.values, op.heun, keep_trajectory=keep_trajectory)
    final = ViscousState(res.t, CellField(res.u, grid), grid, scenario)
    return final, res.records, res


def time_derivative_l1(series: List[SeriesRecord]) -> float:
    """max over the run of |(u^{n+1} - u^n) / dt|_{L1}."""
    if len(series) < 2:
        raise ValueError("need at least two records")
    return float(max(r.dudt_l1 for r in series))


def tv_envelope(t, tv0: float, c: float):
    """(1 + c t) tv0 (1 + c t e^{c t})."""
    t = np.asarray(t, dtype=float)
    return (1 + c * t) * tv0 * (1 + c * t * np.exp(c * t))


def fit_tv_envelope(times, tv, tv0: float, tol: float = 1e-10) -> float:
    """Smallest c >= 0 with tv(t) <= tv_envelope(t, tv0, c) at every sample, by bisection."""
    times = np.asarray(times, dtype=float)
    tv = np.asarray(tv, dtype=float)
    if tv0 <= 0:
        raise ValueError("envelope needs tv0 > 0")

    def ok(c):
        return bool(np.all(tv <= tv_envelope(times, tv0, c) * (1 + 1e-12)))

    if ok(0.0):
        return 0.0
    hi = 1.0
    while not ok(hi):
        hi *= 2
        if hi > 1e6:
            raise ValueError("no envelope constant below 1e6")
    lo = 0.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return hi
