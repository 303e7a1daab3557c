"""
Flux families f(u, x, t) = h(u) X(x, t) with divergence-free X, mollified
initial data, time-step control and scenario assembly.
"""

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .geometry import ChartGeometry, div_at
from .grid import (CellField, StructuredGrid, build_grid, read_field_csv,
                   smoothstep, values_of)

H_KINDS = ("linear", "burgers")


@dataclass(frozen=True)
class FluxFamily:
    """f(u, x, t) = h(u) X(x, t).

    X has chart components (a(t)/sqrt|g|, c(s)) in 2D and a(t)/w(x) in 1D, so
    div_g X = 0 identically. ``a(t) = a`` (``a_mode='constant'``) or
    ``a sin(2 pi t / period)`` (``a_mode='sine'``); ``c(s) = c + c_slope (s - s_mid)``.
    """
    geometry: ChartGeometry
    h_kind: str = "linear"
    a: float = 1.0
    a_mode: str = "constant"
    period: float = 1.0
    c: float = 0.0
    c_slope: float = 0.0

    def __post_init__(self):
        if self.h_kind not in H_KINDS:
            raise ValueError(f"unknown h {self.h_kind!r}")
        if self.a_mode not in ("constant", "sine"):
            raise ValueError(f"unknown a_mode {self.a_mode!r}")
        if self.geometry.dim == 1 and (self.c != 0.0 or self.c_slope != 0.0):
            raise ValueError("azimuthal component c needs a 2D geometry")

    # scalar part
    def h(self, u):
        u = np.asarray(u, dtype=float)
        return u if self.h_kind == "linear" else 0.5 * u * u

    def dh(self, u):
        u = np.asarray(u, dtype=float)
        return np.ones_like(u) if self.h_kind == "linear" else u

    @property
    def critical_points(self):
        """Points where h' vanishes; candidates for flux extrema."""
        return () if self.h_kind == "linear" else (0.0,)

    def max_dh(self, u_range) -> float:
        lo, hi = u_range
        if self.h_kind == "linear":
            return 1.0
        return float(max(abs(lo), abs(hi)))

    # direction field
    def amplitude(self, t):
        if self.a_mode == "sine":
            return self.a * np.sin(2 * np.pi * t / self.period)
        return self.a

    def azimuthal(self, s):
        lo, hi = self.geometry.transverse_range
        return self.c + self.c_slope * (np.asarray(s, dtype=float) - 0.5 * (lo + hi))

    def direction(self, z, t=0.0):
        z = np.asarray(z, dtype=float)
        a = self.amplitude(t)
        first = a / self.geometry.sqrt_det(z)
        if self.geometry.dim == 1:
            return first[None]
        return np.stack([first, self.azimuthal(z[0]) + 0.0 * z[1]])

    def direction_envelope(self, z):
        """Componentwise bound on |X| over all times."""
        z = np.asarray(z, dtype=float)
        first = abs(self.a) / self.geometry.sqrt_det(z)
        if self.geometry.dim == 1:
            return first[None]
        return np.stack([first, np.abs(self.azimuthal(z[0])) + 0.0 * z[1]])

    def wave_speed_bound(self, u_range, samples: int = 257) -> float:
        """sup |h'| times sup |X|_g over the domain."""
        lo, hi = self.geometry.transverse_range
        s = np.linspace(lo, hi, samples)
        z = s[None] if self.geometry.dim == 1 else np.stack([s, np.zeros_like(s)])
        X = self.direction_envelope(z)
        norm = np.sqrt(np.sum(self.geometry.metric_diag(z) * X * X, axis=0))
        return self.max_dh(u_range) * float(np.max(norm))


def flux_eval(family: FluxFamily, u, z, t=0.0):
    return family.h(u) * family.direction(z, t)


def dflux_eval(family: FluxFamily, u, z, t=0.0):
    return family.dh(u) * family.direction(z, t)


def sample_points(geom: ChartGeometry, n: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    lo, hi = geom.transverse_range
    pts = [rng.uniform(lo, hi, n)]
    if geom.dim == 2:
        pts.append(rng.uniform(0.0, 2 * np.pi, n))
    return np.stack(pts)


def max_divergence(geom: ChartGeometry, X, fd_step: float = 1e-3, n_samples: int = 1000,
                   seed: int = 0) -> float:
    z = sample_points(geom, n_samples, seed)
    return float(np.max(np.abs(div_at(geom, X, z, fd_step))))


def verify_div_free(family: FluxFamily, grid: Optional[StructuredGrid], t: float, u_frozen: float,
                    fd_step: float = 1e-3, n_samples: int = 1000, seed: int = 0) -> float:
    """max |div_g f(u_frozen, ., t)| over random points of the domain."""
    geom = family.geometry if grid is None else grid.geometry
    return max_divergence(geom, lambda z: flux_eval(family, u_frozen, z, t), fd_step, n_samples, seed)


# -- initial data ---------------------------------------------------------

@dataclass(frozen=True)
class InitialSpec:
    """Named analytic profile or a CSV file of cell values."""
    profile: str = "constant"
    params: dict = field(default_factory=dict)
    csv: Optional[str] = None

    PROFILES = ("constant", "step", "box", "bump", "cos", "azimuthal-wave", "csv")

    def sampler(self, geom: ChartGeometry):
        p = self.params
        prof = self.profile
        if prof == "constant":
            v = float(p.get("value", 0.0))
            return lambda z: np.full(np.shape(z[0]), v)
        if prof == "step":
            left, right = float(p.get("left", 0.0)), float(p.get("right", 1.0))
            pos = float(p.get("position", np.mean(geom.transverse_range)))
            return lambda z: np.where(np.asarray(z[0]) > pos, right, left)
        if prof == "box":
            amp = float(p.get("amplitude", 1.0))
            lo, hi = geom.transverse_range
            a, b = float(p.get("start", lo + 0.25 * (hi - lo))), float(p.get("stop", lo + 0.5 * (hi - lo)))
            return lambda z: np.where((np.asarray(z[0]) > a) & (np.asarray(z[0]) < b), amp, 0.0)
        if prof == "bump":
            # quintic-smoothstep bump in the transverse coordinate, C^2
            amp = float(p.get("amplitude", 1.0))
            center = float(p.get("center", np.mean(geom.transverse_range)))
            width = float(p.get("width", 0.25))
            base = float(p.get("offset", 0.0))
            return lambda z: base + amp * smoothstep(np.abs(np.asarray(z[0]) - center) / width)
        if prof == "cos":
            amp = float(p.get("amplitude", 1.0))
            return lambda z: amp * np.cos(np.asarray(z[0]))
        if prof == "azimuthal-wave":
            if geom.dim != 2:
                raise ValueError("azimuthal-wave needs a 2D geometry")
            amp = float(p.get("amplitude", 0.5))
            base = float(p.get("offset", 1.0))
            mode = int(p.get("mode", 1))
            return lambda z: base + amp * np.sin(mode * np.asarray(z[1])) + 0.0 * np.asarray(z[0])
        raise ValueError(f"profile {prof!r} has no analytic sampler")

    def field_on(self, grid: StructuredGrid) -> CellField:
        if self.profile == "csv":
            return read_field_csv(self.csv, grid)
        return grid.sample(self.sampler(grid.geometry))


# -- mollification --------------------------------------------------------

@dataclass(frozen=True)
class MollifierSpec:
    """Truncated Gaussian of width sqrt(eps), metric-weighted, renormalised near the boundary."""
    truncation: float = 3.0
    clamp: bool = True

    @staticmethod
    def width(eps: float) -> float:
        return float(np.sqrt(eps))


def _gauss(d, sigma, cut):
    return np.where(np.abs(d) <= cut * sigma, np.exp(-0.5 * (d / sigma) ** 2), 0.0)


def mollify_initial(grid: StructuredGrid, u0, eps: float,
                    spec: MollifierSpec = MollifierSpec()) -> CellField:
    """Discrete convolution with the mollifier kernel, then the sup-norm clamp.

    The kernel is truncated at ``spec.truncation`` widths per axis, weighted
    with the cell volumes and renormalised to unit mass, so constants are
    reproduced exactly.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    u = values_of(grid, u0)
    geom = grid.geometry
    sigma = spec.width(eps)
    if sigma > 0.5 * geom.transverse_extent():
        raise ValueError(f"mollifier width {sigma:.3g} exceeds the domain half-width")
    arc = geom.arclength(grid.centers[0] if grid.dim == 1 else grid.centers[0][:, 0])
    Ks = _gauss(arc[:, None] - arc[None, :], sigma, spec.truncation)
    if grid.dim == 1:
        K = Ks * grid.cell_volume[None, :]
        out = (K @ u) / np.sum(K, axis=1)
    else:
        n0, n1 = grid.shape
        r = geom.radius(grid.centers[0][:, 0])
        m = np.arange(n1)
        dphi = np.minimum(m, n1 - m) * grid.dz[1]
        U = np.fft.rfft(u, axis=1)
        vol_row = grid.cell_volume[:, 0]
        out = np.empty_like(u)
        for i in range(n0):
            kphi = _gauss(r[i] * dphi, sigma, spec.truncation)
            conv = np.fft.irfft(U * np.fft.rfft(kphi)[None, :], n=n1, axis=1)
            weights = Ks[i] * vol_row
            out[i] = (weights @ conv) / (np.sum(weights) * np.sum(kphi))
    if spec.clamp:
        bound = float(np.max(np.abs(u)))
        out = np.clip(out, -bound, bound)
    return CellField(out, grid)


# -- time step ------------------------------------------------------------

def cfl_timestep(cfl: float, h_min: float, lam_max: float, eps: float, n: int,
                 gamma_max: float) -> float:
    """cfl * min(h/lambda, h^2 / (2 n eps gamma)) for a uniform interior stencil."""
    bounds = []
    if lam_max > 0:
        bounds.append(h_min / lam_max)
    if eps > 0:
        bounds.append(h_min ** 2 / (2 * n * eps * gamma_max))
    return cfl * min(bounds) if bounds else np.inf


def advective_rate(family: FluxFamily, grid: StructuredGrid, u_range) -> np.ndarray:
    """Per-cell bound on the Godunov update's dependence on its own value.

    For a discretely divergence-free face flux the one-sided slopes sum to at
    most sup|h'| sum_faces |q_f| / (2 V), q_f = <X, n>_g times face measure.
    """
    env = family.direction_envelope
    qt = env(grid.tface_centers)[0] * grid.tface_scale * grid.tface_measure
    total = qt[1:] + qt[:-1]
    if grid.dim == 2:
        qp = env(grid.pface_centers)[1] * grid.pface_scale * grid.pface_measure
        total = total + qp + np.roll(qp, 1, axis=1)
    return family.max_dh(u_range) * total / (2.0 * grid.cell_volume)


def diffusive_rate(grid: StructuredGrid, eps: float) -> np.ndarray:
    """Per-cell diagonal of -eps * discrete_laplace, odd ghost included."""
    d = grid.tface_diff
    total = d[1:] + d[:-1]
    total = total.copy()
    total[0] += d[0]
    total[-1] += d[-1]
    if grid.dim == 2:
        total = total + grid.pface_diff + np.roll(grid.pface_diff, 1, axis=1)
    return eps * total / grid.cell_volume


def stable_dt(scenario: "Scenario", grid: StructuredGrid, t: float, u_range) -> float:
    """Largest step keeping every forward-Euler stage monotone, times cfl.

    Reduces to cfl * min(h / lambda, h^2 / (2 n eps gamma)) on uniform interior
    cells; boundary cells under the odd Dirichlet ghost diffuse 3/2 times
    faster and are accounted for here.
    """
    ra = float(np.max(advective_rate(scenario.flux, grid, u_range)))
    rd = float(np.max(diffusive_rate(grid, scenario.viscosity))) if scenario.viscosity > 0 else 0.0
    rates = [r for r in (ra, rd) if r > 0]
    if not rates:
        return scenario.horizon - t
    return scenario.cfl * min(1.0 / r for r in rates)


# -- scenario -------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    geometry: ChartGeometry
    flux: FluxFamily
    u0: InitialSpec
    horizon: float
    resolution: tuple
    cfl: float = 0.45
    viscosity: float = 0.0
    mollifier: MollifierSpec = MollifierSpec()
    cadence: int = 4
    name: str = "scenario"
    snapshots: bool = True
    oracle: str = "auto"

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if not 0 < self.cfl < 1:
            raise ValueError("cfl must lie in (0, 1)")
        if self.viscosity < 0:
            raise ValueError("viscosity must be >= 0")
        if self.cadence < 1:
            raise ValueError("cadence must be >= 1")
        if self.flux.geometry != self.geometry:
            raise ValueError("flux family built for a different geometry")

    def build_grid(self) -> StructuredGrid:
        return build_grid(self.geometry, self.resolution)

    def initial_field(self, grid: StructuredGrid) -> CellField:
        return self.u0.field_on(grid)

    def output_times(self):
        return [self.horizon * k / self.cadence for k in range(self.cadence + 1)]

    def replace(self, **kw) -> "Scenario":
        return dataclasses.replace(self, **kw)

    def refined(self, factor: int) -> "Scenario":
        return self.replace(resolution=tuple(int(n) * factor for n in self.resolution))
