"""
Cell-centred structured discretisation of a ChartGeometry.

Cells are indexed ``[i]`` (1D) or ``[i, j]`` with ``i`` transverse and ``j``
azimuthal (periodic). Faces come in two families:

- transverse faces at constant transverse coordinate, shape ``(N0 + 1, N1)``;
  index 0 and N0 are the boundary faces;
- periodic faces between azimuthal neighbours ``j`` and ``j + 1`` (wrapping),
  shape ``(N0, N1)``; absent in 1D.

In 1D ``N1`` is dropped from every shape.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import TWO_PI, ChartGeometry


class GridMismatchError(ValueError):
    """A field or boundary array does not belong to the grid it is used with."""


@dataclass(frozen=True)
class BoundaryFaces:
    index: tuple          # index into the transverse-face array
    cell: tuple           # index of the adjacent interior cell
    side: np.ndarray      # -1 lower end, +1 upper end
    centers: np.ndarray   # (dim, nb)
    normals: np.ndarray   # (dim, nb), unit outward in g
    measure: np.ndarray   # (nb,)

    def __len__(self):
        return len(self.measure)


class StructuredGrid:
    """Geometric factors for a cell-centred grid; immutable after construction."""

    def __init__(self, geometry: ChartGeometry, resolution):
        res = tuple(int(n) for n in np.atleast_1d(resolution))
        if len(res) == 1 and geometry.dim == 2:
            raise ValueError("2D geometry needs a resolution per axis")
        if len(res) != geometry.dim:
            raise ValueError(f"resolution {res} does not match dimension {geometry.dim}")
        if min(res) < 4:
            raise ValueError(f"resolution must be >= 4 per axis, got {res}")
        self.geometry = geometry
        self.shape = res
        self.dim = geometry.dim

        lo, hi = geometry.transverse_range
        self.edges0 = np.linspace(lo, hi, res[0] + 1)
        self.dz = [(hi - lo) / res[0]]
        c0 = 0.5 * (self.edges0[:-1] + self.edges0[1:])
        if self.dim == 2:
            self.dz.append(TWO_PI / res[1])
            c1 = (np.arange(res[1]) + 0.5) * self.dz[1]
            C0, C1 = np.meshgrid(c0, c1, indexing="ij")
            self.centers = np.stack([C0, C1])
        else:
            self.centers = c0[None]
        self.cell_width = np.prod(self.dz)
        self.sqrt_det = geometry.sqrt_det(self.centers)
        self.cell_volume = self.sqrt_det * self.cell_width
        self.transverse_width = self.dz[0]

        # transverse faces: measure = sqrt|g~| times the tangential width
        if self.dim == 2:
            E0, E1 = np.meshgrid(self.edges0, c1, indexing="ij")
            self.tface_centers = np.stack([E0, E1])
            r_face = geometry.radius(self.edges0)
            self.tface_measure = np.broadcast_to(r_face[:, None] * self.dz[1], (res[0] + 1, res[1])).copy()
            # periodic faces between j and j+1 at phi_{j+1/2}
            P0, P1 = np.meshgrid(c0, (np.arange(res[1]) + 1.0) * self.dz[1], indexing="ij")
            self.pface_centers = np.stack([P0, P1])
            self.pface_measure = np.full((res[0], res[1]), self.dz[0])
            # sqrt(g_ii) at the face centre, used to turn X^i into <X, n>_g
            self.tface_scale = np.ones_like(self.tface_measure)
            self.pface_scale = geometry.radius(P0)
        else:
            self.tface_centers = self.edges0[None]
            self.tface_measure = np.ones(res[0] + 1)
            self.tface_scale = geometry.weight(self.edges0)
            self.pface_centers = None
            self.pface_measure = None
            self.pface_scale = None

        # diffusion coefficients: face measure / (sqrt(g_ii) dz_i)
        self.tface_diff = self.tface_measure / (self.tface_scale * self.dz[0])
        self.pface_diff = None if self.dim == 1 else self.pface_measure / (self.pface_scale * self.dz[1])

        self.boundary = self._boundary_faces()
        self.distance = geometry.boundary_distance(self.centers)

    def _boundary_faces(self) -> BoundaryFaces:
        n0 = self.shape[0]
        if self.dim == 1:
            centers = self.tface_centers[:, [0, n0]]
            side = np.array([-1.0, 1.0])
            normals = (side / self.geometry.weight(centers[0]))[None]
            return BoundaryFaces((np.array([0, n0]),), (np.array([0, n0 - 1]),), side,
                                 centers, normals, np.ones(2))
        n1 = self.shape[1]
        j = np.arange(n1)
        fi = np.concatenate([np.zeros(n1, int), np.full(n1, n0)])
        ci = np.concatenate([np.zeros(n1, int), np.full(n1, n0 - 1)])
        fj = np.concatenate([j, j])
        side = np.concatenate([-np.ones(n1), np.ones(n1)])
        centers = self.tface_centers[:, fi, fj]
        normals = np.stack([side, np.zeros_like(side)])
        return BoundaryFaces((fi, fj), (ci, fj), side, centers, normals, self.tface_measure[fi, fj])

    @property
    def ncells(self) -> int:
        return int(np.prod(self.shape))

    @property
    def h_min(self) -> float:
        """Smallest Riemannian cell width."""
        w = [np.min(self.tface_scale) * self.dz[0] if self.dim == 1 else self.dz[0]]
        if self.dim == 2:
            w.append(np.min(self.geometry.radius(self.centers[0])) * self.dz[1])
        return float(min(w))

    @property
    def h_max(self) -> float:
        w = [np.max(self.geometry.weight(self.centers[0])) * self.dz[0] if self.dim == 1 else self.dz[0]]
        if self.dim == 2:
            w.append(np.max(self.geometry.radius(self.centers[0])) * self.dz[1])
        return float(max(w))

    def field(self, values) -> "CellField":
        return CellField(np.asarray(values, dtype=float).reshape(self.shape), self)

    def sample(self, fn) -> "CellField":
        """Evaluate a scalar sampler at the cell centres."""
        return CellField(np.broadcast_to(np.asarray(fn(self.centers), dtype=float), self.shape).copy(), self)

    def __repr__(self):
        return f"StructuredGrid({self.geometry.kind}, shape={self.shape})"


@dataclass(frozen=True, eq=False)
class CellField:
    values: np.ndarray
    grid: StructuredGrid

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise GridMismatchError(f"field shape {self.values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field has non-finite values")

    def __len__(self):
        return self.values.size

    def with_values(self, values) -> "CellField":
        return CellField(np.asarray(values, dtype=float).reshape(self.grid.shape), self.grid)


@dataclass(frozen=True, eq=False)
class CutoffField:
    field: CellField
    delta: float
    gradient: np.ndarray  # grad_g R_delta at the cell centres, (dim, *shape)

    @property
    def values(self):
        return self.field.values


def build_grid(geom: ChartGeometry, resolution) -> StructuredGrid:
    return StructuredGrid(geom, resolution)


def values_of(grid: StructuredGrid, field) -> np.ndarray:
    """Cell values of ``field`` on ``grid``; accepts a CellField or a plain array."""
    if isinstance(field, CellField):
        if field.grid is not grid:
            raise GridMismatchError("field belongs to a different grid")
        return field.values
    arr = np.asarray(field, dtype=float)
    if arr.shape != grid.shape:
        raise GridMismatchError(f"array shape {arr.shape} != grid shape {grid.shape}")
    return arr


def integrate(grid: StructuredGrid, field) -> float:
    return float(np.sum(values_of(grid, field) * grid.cell_volume))


def boundary_integrate(grid: StructuredGrid, values) -> float:
    values = np.asarray(values, dtype=float)
    if values.shape != (len(grid.boundary),):
        raise GridMismatchError(f"need {len(grid.boundary)} boundary values, got shape {values.shape}")
    return float(np.sum(values * grid.boundary.measure))


def _d_transverse(u: np.ndarray, dz: float) -> np.ndarray:
    """d/dz0 along axis 0: centred inside, second-order one-sided at the ends."""
    d = np.empty_like(u)
    d[1:-1] = (u[2:] - u[:-2]) / (2 * dz)
    d[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * dz)
    d[-1] = (u[-3] - 4 * u[-2] + 3 * u[-1]) / (2 * dz)
    return d


def coordinate_gradient(grid: StructuredGrid, field) -> np.ndarray:
    """Covariant components d_i u at the cell centres, shape (dim, *shape)."""
    u = values_of(grid, field)
    parts = [_d_transverse(u, grid.dz[0])]
    if grid.dim == 2:
        parts.append((np.roll(u, -1, axis=1) - np.roll(u, 1, axis=1)) / (2 * grid.dz[1]))
    return np.stack(parts)


def discrete_gradient(grid: StructuredGrid, field) -> np.ndarray:
    """grad_g u = g^{ij} d_j u at the cell centres, shape (dim, *shape)."""
    return coordinate_gradient(grid, field) / grid.geometry.metric_diag(grid.centers)


def gradient_norm(grid: StructuredGrid, field) -> np.ndarray:
    """|grad_g u|_g per cell."""
    du = coordinate_gradient(grid, field)
    gd = grid.geometry.metric_diag(grid.centers)
    return np.sqrt(np.sum(du * du / gd, axis=0))


def laplace_face_fluxes(grid: StructuredGrid, u: np.ndarray):
    """Fluxes of grad_g u through every face (positive along the axis).

    Dirichlet-zero is imposed by the odd ghost value -u at the boundary faces,
    so the face value vanishes exactly.
    """
    tdiff = grid.tface_diff
    ft = np.empty(tdiff.shape)
    ft[1:-1] = tdiff[1:-1] * (u[1:] - u[:-1])
    ft[0] = tdiff[0] * (u[0] - (-u[0]))
    ft[-1] = tdiff[-1] * ((-u[-1]) - u[-1])
    fp = None
    if grid.dim == 2:
        fp = grid.pface_diff * (np.roll(u, -1, axis=1) - u)
    return ft, fp


def divergence_of_face_fluxes(grid: StructuredGrid, ft, fp=None) -> np.ndarray:
    """Cell-wise (sum of outgoing face fluxes) / volume, given axis-oriented face fluxes."""
    out = ft[1:] - ft[:-1]
    if fp is not None:
        out = out + fp - np.roll(fp, 1, axis=1)
    return out / grid.cell_volume


def discrete_laplace(grid: StructuredGrid, field, boundary_mode: str = "dirichlet-zero") -> CellField:
    if boundary_mode != "dirichlet-zero":
        raise ValueError(f"unsupported boundary_mode {boundary_mode!r}")
    u = values_of(grid, field)
    ft, fp = laplace_face_fluxes(grid, u)
    return CellField(divergence_of_face_fluxes(grid, ft, fp), grid)


def face_normal_flux(grid: StructuredGrid, X):
    """<X, n>_g times face measure on every face, n the unit normal along +axis.

    ``X`` is a vector-field sampler. Returns ``(q_transverse, q_periodic)``;
    ``q_periodic`` is None in 1D.
    """
    qt = X(grid.tface_centers)[0] * grid.tface_scale * grid.tface_measure
    qp = None
    if grid.dim == 2:
        qp = X(grid.pface_centers)[1] * grid.pface_scale * grid.pface_measure
    return qt, qp


def smoothstep(t):
    """Quintic step: 1 for t <= 0, 0 for t >= 1, C^2 in between."""
    t = np.clip(t, 0.0, 1.0)
    return 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


def smoothstep_derivative(t):
    inside = (t > 0.0) & (t < 1.0)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, -30.0 * t * t * (1.0 - t) ** 2, 0.0)


def cutoff_values(geom: ChartGeometry, z, delta: float):
    return smoothstep(2.0 * geom.boundary_distance(z) / delta - 1.0)


def cutoff_gradient(geom: ChartGeometry, z, delta: float):
    d = geom.boundary_distance(z)
    dR = smoothstep_derivative(2.0 * d / delta - 1.0) * (2.0 / delta)
    return dR * geom.boundary_distance_gradient(z)


def build_cutoff(grid: StructuredGrid, delta: float) -> CutoffField:
    """Boundary cutoff R_delta: 1 within delta/2 of the boundary, 0 beyond delta."""
    extent = grid.geometry.transverse_extent()
    if not (0.0 < delta < 0.5 * extent):
        raise ValueError(f"delta={delta} outside (0, {0.5 * extent})")
    vals = cutoff_values(grid.geometry, grid.centers, delta)
    grad = cutoff_gradient(grid.geometry, grid.centers, delta)
    return CutoffField(CellField(vals, grid), float(delta), grad)


def metric_distance(grid: StructuredGrid, x0, cells=None) -> np.ndarray:
    """Distance from x0 to the cell centres through arclength coordinates.

    Exact across the boundary direction; the azimuthal part uses the radius at
    x0, which is accurate to second order in the distance. ``cells`` optionally
    restricts the computation to flat cell indices.
    """
    geom = grid.geometry
    x0 = np.asarray(x0, dtype=float)
    centers = grid.centers.reshape(grid.dim, -1)
    if cells is not None:
        centers = centers[:, cells]
    if grid.dim == 1:
        d = np.abs(geom.arclength(centers[0]) - geom.arclength(x0[0]))
    else:
        ds = centers[0] - x0[0]
        dphi = np.abs(np.mod(centers[1] - x0[1] + np.pi, TWO_PI) - np.pi)
        d = np.sqrt(ds * ds + (geom.radius(x0[0]) * dphi) ** 2)
    return d if cells is not None else d.reshape(grid.shape)


def ball_weights(grid: StructuredGrid, x0, rho: float) -> np.ndarray:
    """Normalised volume weights of the cells whose centres lie within rho of x0."""
    inside = metric_distance(grid, x0) <= rho
    if not np.any(inside):
        raise ValueError(f"radius {rho} contains no cell centre")
    w = np.where(inside, grid.cell_volume, 0.0)
    return w / np.sum(w)


def lebesgue_average(grid: StructuredGrid, field, x0, rho: float) -> float:
    """Volume-weighted mean of the field over the metric ball B_rho(x0) intersected with M."""
    return float(np.sum(ball_weights(grid, x0, rho) * values_of(grid, field)))


# -- CSV ------------------------------------------------------------------

def write_field_csv(path, field: CellField) -> None:
    grid = field.grid
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if grid.dim == 1:
            w.writerow(["i", "z1", "value"])
            for i in range(grid.shape[0]):
                w.writerow([i, f"{grid.centers[0, i]:.17g}", f"{field.values[i]:.17g}"])
        else:
            w.writerow(["i", "j", "z1", "z2", "value"])
            for i in range(grid.shape[0]):
                for j in range(grid.shape[1]):
                    w.writerow([i, j, f"{grid.centers[0, i, j]:.17g}",
                                f"{grid.centers[1, i, j]:.17g}", f"{field.values[i, j]:.17g}"])


def read_field_csv(path, grid: StructuredGrid) -> CellField:
    vals = np.full(grid.shape, np.nan)
    with Path(path).open() as fh:
        for row in csv.DictReader(fh):
            idx = (int(row["i"]),) if grid.dim == 1 else (int(row["i"]), int(row["j"]))
            vals[idx] = float(row["value"])
    if np.isnan(vals).any():
        raise GridMismatchError(f"{path} does not cover every cell of {grid}")
    return CellField(vals, grid)
