"""
Discrete total variation, boundary traces by ball averaging, and the
integration-by-parts identities that characterise the trace of a BV field.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import div_at
from .grid import (CellField, StructuredGrid, boundary_integrate, build_cutoff,
                   coordinate_gradient, face_normal_flux, gradient_norm, integrate,
                   metric_distance, values_of)

TOL_GRAD = 1e-10
TRACE_RADII = (4.0, 8.0)  # in units of the transverse cell width at the face


@dataclass(frozen=True)
class TVReport:
    tv_gradient: float
    tv_jump: float
    tv_boundary: float = 0.0  # sum of |u| times measure over boundary faces (jump to datum 0)

    @property
    def tv_extended(self) -> float:
        """tv_jump plus the jumps against the zero exterior datum."""
        return self.tv_jump + self.tv_boundary


@dataclass(frozen=True, eq=False)
class TraceField:
    values: np.ndarray    # Tu per boundary face, within [-|u|_inf, |u|_inf]
    raw: np.ndarray       # two-radius extrapolation before the sup-norm projection
    radii: tuple          # (rho1, rho2) per boundary face, arrays
    residual: np.ndarray  # size of the extrapolation correction |raw - A(rho1)|
    clipped: np.ndarray   # faces where the projection was active

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True, eq=False)
class SmoothBVSurrogate:
    density: np.ndarray    # |Du| per cell: |grad_g u|_g * cell volume
    direction: np.ndarray  # sigma_u, (dim, *shape); zero where undefined
    defined: np.ndarray


def jump_sums(grid: StructuredGrid, u: np.ndarray):
    """(interior jump sum, boundary jump sum against datum 0), each weighted by face measure."""
    jt = np.abs(np.diff(u, axis=0)) * grid.tface_measure[1:-1]
    total = np.sum(jt)
    if grid.dim == 2:
        jp = np.abs(np.roll(u, -1, axis=1) - u) * grid.pface_measure
        total = total + np.sum(jp)
    ub = u[grid.boundary.cell]
    return float(total), float(np.sum(np.abs(ub) * grid.boundary.measure))


def total_variation(grid: StructuredGrid, field) -> TVReport:
    u = values_of(grid, field)
    tv_grad = float(np.sum(gradient_norm(grid, u) * grid.cell_volume))
    tv_jump, tv_b = jump_sums(grid, u)
    return TVReport(tv_grad, tv_jump, tv_b)


def tv_jump(grid: StructuredGrid, field) -> float:
    return jump_sums(grid, values_of(grid, field))[0]


def smooth_surrogate(grid: StructuredGrid, field, tol_grad: float = TOL_GRAD) -> SmoothBVSurrogate:
    u = values_of(grid, field)
    du = coordinate_gradient(grid, u)
    gd = grid.geometry.metric_diag(grid.centers)
    norm = np.sqrt(np.sum(du * du / gd, axis=0))
    defined = norm > tol_grad
    grad = du / gd
    direction = np.where(defined, grad / np.where(defined, norm, 1.0), 0.0)
    return SmoothBVSurrogate(np.where(defined, norm, 0.0) * grid.cell_volume, direction, defined)


# -- traces ---------------------------------------------------------------

@lru_cache(maxsize=32)
def _trace_operator(grid: StructuredGrid):
    """Per boundary face: (flat cell indices, weights, rho1, rho2, weights at rho1).

    The trace is linear extrapolation of half-ball averages A(rho) to rho = 0,
    parametrised by the volume-weighted mean depth of the cell centres inside
    each ball; the continuum mean depth is proportional to rho, and using the
    discrete one removes lattice-counting noise from the extrapolation.
    """
    if grid.shape[0] < 16:
        raise ValueError(f"trace extraction needs >= 16 transverse cells, got {grid.shape[0]}")
    bf = grid.boundary
    depth = grid.distance.ravel()
    vol = grid.cell_volume.ravel()
    hs = grid.tface_scale[bf.index] * grid.dz[0]
    near = np.nonzero(depth <= TRACE_RADII[1] * np.max(hs) * (1 + 1e-12))[0]
    ops = []
    for b in range(len(bf)):
        x0 = bf.centers[:, b]
        h = float(hs[b])
        rho1, rho2 = TRACE_RADII[0] * h, TRACE_RADII[1] * h
        dist = metric_distance(grid, x0, near)
        keep = dist <= rho2 * (1 + 1e-12)
        idx, d = near[keep], dist[keep]
        w2 = vol[idx] / np.sum(vol[idx])
        in1 = d <= rho1 * (1 + 1e-12)
        if not np.any(in1):
            raise ValueError("inner trace radius contains no cell centre")
        w1 = np.where(in1, vol[idx], 0.0)
        w1 = w1 / np.sum(w1)
        m1, m2 = np.sum(w1 * depth[idx]), np.sum(w2 * depth[idx])
        lam = m1 / (m2 - m1)
        ops.append((idx, w1 - lam * (w2 - w1), rho1, rho2, w1))
    return ops


def extract_trace(grid: StructuredGrid, field) -> TraceField:
    """Boundary trace Tu by shrinking-ball averages extrapolated to radius zero.

    ``raw`` is linear in the field. ``values`` projects it onto
    [-|u|_inf, |u|_inf]; the projection only acts where u attains its sup
    norm at the boundary and the extrapolation overshoots the cell values.
    """
    u = values_of(grid, field).ravel()
    ops = _trace_operator(grid)
    raw = np.array([np.dot(w, u[idx]) for idx, w, *_ in ops])
    a1 = np.array([np.dot(w1, u[idx]) for idx, _, _, _, w1 in ops])
    bound = float(np.max(np.abs(u)))
    values = np.clip(raw, -bound, bound)
    radii = (np.array([op[2] for op in ops]), np.array([op[3] for op in ops]))
    return TraceField(values, raw, radii, np.abs(raw - a1), values != raw)


def trace_matrix(grid: StructuredGrid) -> np.ndarray:
    """Dense (boundary faces, cells) matrix M with M @ u.ravel() == extract_trace(grid, u).raw."""
    ops = _trace_operator(grid)
    mat = np.zeros((len(ops), grid.ncells))
    for b, (idx, w, *_) in enumerate(ops):
        mat[b, idx] = w
    return mat


def boundary_normal_component(grid: StructuredGrid, X) -> np.ndarray:
    """<X, N>_g at every boundary face centre for a vector-field sampler X."""
    bf = grid.boundary
    Xb = X(bf.centers)
    gd = grid.geometry.metric_diag(bf.centers)
    return np.sum(gd * Xb * bf.normals, axis=0)


def trace_formula_sides(grid: StructuredGrid, field, X, kind: str = "auto",
                        fd_step: float = 1e-4):
    """(volume side, interface side, boundary side) of the integration-by-parts identity.

    volume side:    int_M u div_g X dv_g
    interface side: -int_M <X, sigma_u>_g d|Du|
    boundary side:  int_dM <X, N>_g Tu dv_g~

    ``kind`` selects the surrogate for |Du| and sigma_u: ``smooth`` uses the
    cell gradient, ``piecewise`` uses face jumps. ``auto`` picks piecewise
    when the field takes at most two distinct values.
    """
    u = values_of(grid, field)
    if kind == "auto":
        kind = "piecewise" if np.unique(u).size <= 2 else "smooth"
    if kind == "piecewise" and np.unique(u).size > 2:
        raise ValueError("piecewise surrogate needs a field with at most two values")
    if kind not in ("smooth", "piecewise"):
        raise ValueError(f"unsupported surrogate class {kind!r}")

    lhs = integrate(grid, u * div_at(grid.geometry, X, grid.centers, fd_step))
    if kind == "smooth":
        sur = smooth_surrogate(grid, u)
        gd = grid.geometry.metric_diag(grid.centers)
        pairing = np.sum(gd * X(grid.centers) * sur.direction, axis=0)
        interface = -float(np.sum(pairing * sur.density))
    else:
        qt, qp = face_normal_flux(grid, X)
        interface = -float(np.sum(qt[1:-1] * np.diff(u, axis=0)))
        if qp is not None:
            interface -= float(np.sum(qp * (np.roll(u, -1, axis=1) - u)))
    tr = extract_trace(grid, u)
    boundary = boundary_integrate(grid, boundary_normal_component(grid, X) * tr.raw)
    return lhs, interface, boundary


def trace_formula_residual(grid: StructuredGrid, field, X, kind: str = "auto",
                           fd_step: float = 1e-4) -> float:
    lhs, interface, boundary = trace_formula_sides(grid, field, X, kind, fd_step)
    return abs(lhs - (interface + boundary))


def _check_delta(grid: StructuredGrid, delta: float):
    h = grid.h_max if grid.dim == 1 else grid.dz[0]
    extent = grid.geometry.transverse_extent()
    if not (4 * h < delta < 0.25 * extent):
        raise ValueError(f"delta={delta} outside ({4 * h:.4g}, {0.25 * extent:.4g})")


def cutoff_pairing(grid: StructuredGrid, field, X, delta: float) -> float:
    """int_M u <grad_g R_delta, X>_g dv_g."""
    _check_delta(grid, delta)
    u = values_of(grid, field)
    cut = build_cutoff(grid, delta)
    gd = grid.geometry.metric_diag(grid.centers)
    pair = np.sum(gd * cut.gradient * X(grid.centers), axis=0)
    return integrate(grid, u * pair)


def compose_trace_check(grid: StructuredGrid, field, h_fn) -> float:
    """max over boundary faces of |T[h(u)] - h(Tu)|."""
    u = values_of(grid, field)
    lhs = extract_trace(grid, h_fn(u)).values
    rhs = h_fn(extract_trace(grid, u).values)
    return float(np.max(np.abs(lhs - rhs)))


def flux_trace_pairing(grid: StructuredGrid, field, flux, t: float, phi, delta: float):
    """(int_M <f(u), grad_g R_delta>_g phi dv_g, int_dM <f(Tu), N>_g phi dv_g~).

    ``phi`` is a CellField (its boundary values are taken as its trace) or a
    scalar sampler evaluated at the boundary face centres.
    """
    _check_delta(grid, delta)
    u = values_of(grid, field)
    geom = grid.geometry
    if callable(phi):
        phi_cells = np.broadcast_to(phi(grid.centers), grid.shape)
        phi_b = np.broadcast_to(phi(grid.boundary.centers), (len(grid.boundary),))
    else:
        phi_cells = values_of(grid, phi)
        phi_b = extract_trace(grid, phi_cells).raw
    cut = build_cutoff(grid, delta)
    gd = geom.metric_diag(grid.centers)
    X = flux.direction(grid.centers, t)
    volume = integrate(grid, flux.h(u) * np.sum(gd * X * cut.gradient, axis=0) * phi_cells)
    Tu = extract_trace(grid, u).values
    XN = boundary_normal_component(grid, lambda z: flux.direction(z, t))
    boundary = boundary_integrate(grid, flux.h(Tu) * XN * phi_b)
    return volume, boundary


def composed_tv_bounded(grid: StructuredGrid, field, F) -> float:
    """tv_jump of x -> F(u(x), x); F takes (u values, centre coordinates)."""
    u = values_of(grid, field)
    return tv_jump(grid, np.broadcast_to(F(u, grid.centers), grid.shape))
