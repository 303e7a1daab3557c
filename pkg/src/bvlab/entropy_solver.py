"""
Monotone finite-volume solver for the hyperbolic problem with the boundary
condition realised by Godunov fluxes against exterior state 0, together with
cell-wise, weak-form and boundary entropy residuals.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bv_trace import boundary_normal_component, trace_matrix
from .fv import (AdvectionOperator, InstabilityError, LoopResult, SeriesRecord, godunov_flux,
                 run_loop)
from .grid import (CellField, StructuredGrid, divergence_of_face_fluxes, integrate, smoothstep,
                   smoothstep_derivative, values_of)
from .problem import FluxFamily, Scenario, stable_dt

__all__ = ["HyperbolicState", "EntropyCheckConfig", "godunov_flux", "step_hyperbolic",
           "solve_hyperbolic", "bln_residual", "entropy_residual_cells", "entropy_residual_weak",
           "l1_contraction_check", "InstabilityError", "HyperbolicRun"]


@dataclass
class HyperbolicState:
    t: float
    u: CellField
    grid: StructuredGrid
    scenario: Scenario


@dataclass(frozen=True)
class EntropyCheckConfig:
    """Entropy-check sampling. ``kruzkov_levels=None`` means 21 levels over [-|u0|, |u0|]."""
    kruzkov_levels: Optional[tuple] = None
    n_levels: int = 21
    k_samples_boundary: int = 101
    lattice: int = 3
    eta: float = 1e-3

    def __post_init__(self):
        if self.kruzkov_levels is not None and len(self.kruzkov_levels) == 0:
            raise ValueError("kruzkov_levels must be nonempty")
        if self.n_levels < 1 or self.k_samples_boundary < 2 or self.lattice < 1:
            raise ValueError("sampling counts out of range")

    def levels(self, bound: float) -> np.ndarray:
        if self.kruzkov_levels is not None:
            return np.asarray(self.kruzkov_levels, dtype=float)
        return np.linspace(-bound, bound, self.n_levels)


def sign(x):
    """sgn with sgn(0) = 0."""
    return np.sign(x)


def S_eta(z, eta):
    """Smooth approximation of |z|: z^2/(2 eta) + eta/2 inside [-eta, eta]."""
    z = np.asarray(z, dtype=float)
    return np.where(np.abs(z) < eta, z * z / (2 * eta) + eta / 2, np.abs(z))


def s_eta(z, eta):
    """Derivative of S_eta, a Lipschitz approximation of sgn."""
    return np.clip(np.asarray(z, dtype=float) / eta, -1.0, 1.0)


# -- stepping ---------------------------------------------------------------

def euler_update(adv: AdvectionOperator, u: np.ndarray, t: float, dt: float):
    div, out = adv.divergence(u, t)
    return u - dt * div, out


def step_hyperbolic(state: HyperbolicState, dt: float) -> HyperbolicState:
    """Forward-Euler Godunov step with exterior state 0 on boundary faces."""
    adv = AdvectionOperator(state.scenario.flux, state.grid)
    u = state.u.values
    u_new, _ = euler_update(adv, u, state.t, dt)
    bound = float(np.max(np.abs(u)))
    linf = float(np.max(np.abs(u_new)))
    if not np.isfinite(linf) or (bound > 0 and linf > 1.1 * bound) or (bound == 0 and linf > 0):
        raise InstabilityError(f"sup norm grew from {bound:.4g} to {linf:.4g}", state.t + dt, None, linf)
    return HyperbolicState(state.t + dt, CellField(u_new, state.grid), state.grid, state.scenario)


def entropy_residual_cells(adv: AdvectionOperator, u_old: np.ndarray, u_new: np.ndarray,
                           dt: float, t: float, k: float) -> float:
    """max over cells of [|u_new - k| - |u_old - k| + dt/V * sum of outgoing Q]_+."""
    qt, qp = adv.entropy_fluxes(u_old, t, k)
    lhs = np.abs(u_new - k) - np.abs(u_old - k) + dt * divergence_of_face_fluxes(adv.grid, qt, qp)
    return float(max(np.max(lhs), 0.0))


def entropy_residuals_all_levels(adv: AdvectionOperator, u_old, u_new, dt, t, levels) -> float:
    return max(entropy_residual_cells(adv, u_old, u_new, dt, t, k) for k in levels)


@dataclass
class HyperbolicRun:
    state: HyperbolicState
    series: list
    traces: list
    loop: LoopResult
    bln: list = field(default_factory=list)   # per record: residual per boundary face (or None)


def bln_residual(family: FluxFamily, trace_value, normal_speed,
                 config: EntropyCheckConfig = EntropyCheckConfig()):
    """|min over k in I(Tu, 0) of sgn(Tu) (h(Tu) - h(k)) <X, N>_g|, vectorised over faces.

    ``normal_speed`` is <X, N>_g at the face. The k grid holds
    ``config.k_samples_boundary`` uniform samples plus the critical points of h
    that fall inside the interval, so the minimum is exact for built-in h.
    """
    tu = np.atleast_1d(np.asarray(trace_value, dtype=float))
    xn = np.broadcast_to(np.asarray(normal_speed, dtype=float), tu.shape)
    s = np.linspace(0.0, 1.0, config.k_samples_boundary)
    ks = tu[:, None] * s[None, :]   # uniform samples of I(Tu, 0)
    lo, hi = np.minimum(tu, 0.0), np.maximum(tu, 0.0)
    for c in family.critical_points:
        ks = np.concatenate([ks, np.clip(np.full((len(tu), 1), c), lo[:, None], hi[:, None])], axis=1)
    vals = sign(tu)[:, None] * (family.h(tu)[:, None] - family.h(ks)) * xn[:, None]
    out = np.abs(np.min(vals, axis=1))
    out = np.where(tu == 0.0, 0.0, out)
    return out if np.ndim(trace_value) else float(out[0])


def solve_hyperbolic(scenario: Scenario, grid: StructuredGrid = None, keep_trajectory: bool = False,
                     check_entropy: bool = True, config: EntropyCheckConfig = EntropyCheckConfig(),
                     u0: Optional[np.ndarray] = None, dt_sequence=None, u_bound=None) -> HyperbolicRun:
    """Forward-Euler Godunov march to the horizon.

    With ``check_entropy`` every step is checked against the cell entropy
    inequality at all Kruzkov levels; the per-record maximum lands in the
    series. BLN residuals are evaluated from the traces at the output times.
    """
    if scenario.viscosity != 0:
        raise ValueError("solve_hyperbolic needs viscosity = 0")
    grid = scenario.build_grid() if grid is None else grid
    u_init = scenario.initial_field(grid).values if u0 is None else np.asarray(u0, dtype=float)
    adv = AdvectionOperator(scenario.flux, grid)
    levels = config.levels(float(np.max(np.abs(u_init))))

    def stepper(u, t, dt):
        return euler_update(adv, u, t, dt)

    on_step = None
    if check_entropy:
        def on_step(u_old, u_new, t, dt):
            return entropy_residuals_all_levels(adv, u_old, u_new, dt, t, levels)

    res = run_loop(scenario, grid, u_init, stepper, u_bound=u_bound, on_step=on_step,
                   keep_trajectory=keep_trajectory, dt_sequence=dt_sequence)
    bln = []
    for rec, tr in zip(res.records, res.traces):
        if tr is None:
            bln.append(None)
            continue
        xn = boundary_normal_component(grid, lambda z: scenario.flux.direction(z, rec.t))
        r = bln_residual(scenario.flux, tr.values, xn, config)
        rec.bln_resid_max = float(np.max(r))
        bln.append(r)
    state = HyperbolicState(res.t, CellField(res.u, grid), grid, scenario)
    return HyperbolicRun(state, res.records, res.traces, res, bln)


# -- weak form --------------------------------------------------------------

@dataclass(frozen=True)
class BumpTest:
    """Tensor-product quintic bump phi(x, t) >= 0 with centres c and radii r per coordinate."""
    centers: tuple   # (z0[, z1], t)
    radii: tuple

    def _factor(self, x, c, r, periodic=False):
        d = np.asarray(x, dtype=float) - c
        if periodic:
            d = (d + np.pi) % (2 * np.pi) - np.pi
        return smoothstep(np.abs(d) / r), smoothstep_derivative(np.abs(d) / r) * np.sign(d) / r

    def space(self, z):
        """(value, coordinate derivatives) of the spatial part at z (dim, ...)."""
        dim = len(self.centers) - 1
        parts = [self._factor(z[i], self.centers[i], self.radii[i], periodic=(i == 1)) for i in range(dim)]
        val = np.prod([p[0] for p in parts], axis=0)
        ders = []
        for i in range(dim):
            d = parts[i][1]
            for j in range(dim):
                if j != i:
                    d = d * parts[j][0]
            ders.append(d)
        return val, np.stack(ders)

    def time(self, t):
        v, d = self._factor(t, self.centers[-1], self.radii[-1])
        return v, d


def bump_lattice(grid: StructuredGrid, horizon: float, n: int = 3):
    """n^(dim+1) bumps: transverse centres include both boundaries, times inside (0, T)."""
    lo, hi = grid.geometry.transverse_range
    zc = np.linspace(lo, hi, n)
    rz = (hi - lo) / max(n - 1, 1)
    tc = horizon * (np.arange(n) + 1) / (n + 1)
    rt = horizon / (n + 1)
    tests = []
    if grid.dim == 1:
        for a in zc:
            for b in tc:
                tests.append(BumpTest((a, b), (rz, rt)))
    else:
        pc = 2 * np.pi * np.arange(n) / n
        rp = 2 * np.pi / n
        for a in zc:
            for p in pc:
                for b in tc:
                    tests.append(BumpTest((a, p, b), (rz, rp, rt)))
    return tests


def entropy_residual_weak(grid: StructuredGrid, family: FluxFamily, trajectory, config=EntropyCheckConfig(),
                          tests=None, horizon=None) -> float:
    """min over (k, phi) of the discretised weak entropy inequality.

    Volume terms use the state at the start of each step, the exact time
    increment of phi over the step, and phi's gradient at the step midpoint.
    The boundary term uses the trace of the state at every step.
    """
    if len(trajectory) < 2:
        raise ValueError("trajectory needs at least two snapshots")
    times = np.array([t for t, _ in trajectory])
    if np.max(np.diff(times)) > 0.05 * (times[-1] - times[0]):
        raise ValueError("snapshot cadence too coarse for the weak entropy residual")
    horizon = times[-1] if horizon is None else horizon
    tests = bump_lattice(grid, horizon, config.lattice) if tests is None else tests
    U = np.stack([u.ravel() for _, u in trajectory[:-1]])           # (steps, cells)
    t0, t1 = times[:-1], times[1:]
    dt = t1 - t0
    tm = 0.5 * (t0 + t1)
    vol = grid.cell_volume.ravel()
    z = grid.centers.reshape(grid.dim, -1)
    TU = U @ trace_matrix(grid).T                                    # (steps, faces)
    TU = np.clip(TU, -np.max(np.abs(U)), np.max(np.abs(U)))
    bf = grid.boundary
    bound = float(np.max(np.abs(U)))
    Xall = np.stack([family.direction(z, tt) for tt in tm])          # (steps, dim, cells)
    XN = np.stack([boundary_normal_component(grid, lambda zz, tt=tt: family.direction(zz, tt))
                   for tt in tm])                                     # (steps, faces)
    hU, hTU = family.h(U), family.h(TU)
    worst = np.inf
    for test in tests:
        sv, sd = test.space(z)                                       # (cells,), (dim, cells)
        bv, _ = test.space(bf.centers)
        dphi_t = test.time(t1)[0] - test.time(t0)[0]
        wm = dt * test.time(tm)[0]
        pair = np.einsum("sdc,dc->sc", Xall, sd) * vol               # <X, grad phi>_g dv per cell
        xnb = XN * (bv * bf.measure)[None, :]
        for k in config.levels(bound):
            fk = family.h(k)
            term_t = np.sum((np.abs(U - k) @ (sv * vol)) * dphi_t)
            term_x = np.sum(wm * np.sum(sign(U - k) * (hU - fk) * pair, axis=1))
            term_b = np.sum(wm * np.sum(sign(k) * (hTU - fk) * xnb, axis=1))
            worst = min(worst, term_t + term_x + term_b)
    return float(worst)


def l1_contraction_check(scenario: Scenario, u0_a, u0_b, grid: StructuredGrid = None):
    """L1 distance between two runs at every output time.

    Both fields are advanced in lockstep with one step sequence, chosen for
    the union of their invariant ranges, so the scheme's monotonicity gives
    exact contraction.
    """
    grid = scenario.build_grid() if grid is None else grid
    pair = np.stack([values_of(grid, u0_a), values_of(grid, u0_b)])
    bound = float(np.max(np.abs(pair)))
    adv = AdvectionOperator(scenario.flux, grid)
    dt_base = stable_dt(scenario, grid, 0.0, (-bound, bound))
    out = [integrate(grid, np.abs(pair[0] - pair[1]))]
    t = 0.0
    for t_out in scenario.output_times()[1:]:
        while t < t_out - 1e-14 * max(1.0, t_out):
            dt = min(dt_base, t_out - t)
            if t_out - t - dt < 1e-9 * dt:
                dt = t_out - t
            pair = np.stack([euler_update(adv, pair[0], t, dt)[0], euler_update(adv, pair[1], t, dt)[0]])
            t += dt
        out.append(integrate(grid, np.abs(pair[0] - pair[1])))
    return out
