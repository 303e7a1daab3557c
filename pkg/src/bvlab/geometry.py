"""
Pointwise Riemannian structure on single-chart manifolds with boundary.

Three chart families are shipped:

* ``weighted-interval``: x in [x_lo, x_hi] with metric w(x)^2 dx^2.
* ``spherical-band``: (theta, phi) in [theta0, theta1] x [0, 2 pi) with
  metric d theta^2 + sin^2(theta) d phi^2.
* ``surface-of-revolution``: (s, phi) in [s_lo, s_hi] x [0, 2 pi) with
  metric ds^2 + r(s)^2 d phi^2.

Coordinate index 0 is always the transverse coordinate (the one that meets
the boundary); index 1, when present, is the periodic azimuth. For the 2D
kinds the transverse coordinate is arclength, so coordinate distance to the
boundary is Riemannian distance.

Samplers follow one convention throughout the package: a scalar sampler maps
``z`` of shape ``(dim, ...)`` to an array of shape ``(...)``; a vector-field
sampler maps it to shape ``(dim, ...)`` (contravariant chart components).
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

KINDS = ("weighted-interval", "spherical-band", "surface-of-revolution")
TWO_PI = 2.0 * np.pi
DEFAULT_FD_STEP = 1e-3

# Gauss-Legendre rule for the interval arclength; exact for the polynomial
# built-in weights.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class DomainError(ValueError):
    """A point lies outside the closed chart domain."""


class InvalidQueryError(ValueError):
    """A query does not make sense for the given point (e.g. a normal on a periodic side)."""


@dataclass(frozen=True)
class ChartGeometry:
    kind: str
    domain: tuple
    side_tags: tuple
    metric_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown geometry kind {self.kind!r}")
        lo, hi = self.domain[0]
        if not lo < hi:
            raise ValueError(f"empty transverse range [{lo}, {hi}]")
        if self.kind == "weighted-interval":
            if len(self.domain) != 1 or tuple(self.side_tags) != ("boundary", "boundary"):
                raise ValueError("weighted-interval needs one axis with both ends tagged boundary")
            beta = self.metric_params.get("beta", 0.0)
            if self.metric_params.get("weight", "one") not in ("one", "linear"):
                raise ValueError(f"unknown weight {self.metric_params.get('weight')!r}")
            if beta < 0:
                raise ValueError("beta must be >= 0")
            if np.min(self.weight(np.array([lo, hi]))) <= 0:
                raise ValueError("weight must be positive on the domain")
        else:
            if len(self.domain) != 2:
                raise ValueError(f"{self.kind} needs a 2D domain")
            if tuple(self.side_tags) != ("boundary", "boundary", "periodic", "periodic"):
                raise ValueError("2D kinds need (boundary, boundary, periodic, periodic) side tags")
            plo, phi = self.domain[1]
            if plo != 0.0 or not np.isclose(phi, TWO_PI):
                raise ValueError("azimuth must span [0, 2 pi)")
            if self.kind == "spherical-band" and not (0.0 < lo < hi < np.pi):
                raise ValueError("band needs 0 < theta0 < theta1 < pi")
            if self.kind == "surface-of-revolution":
                prof = self.metric_params.get("profile", "cylinder")
                if prof not in ("cylinder", "sine"):
                    raise ValueError(f"unknown profile {prof!r}")
                if abs(self.metric_params.get("alpha", 0.0)) > 0.5:
                    raise ValueError("|alpha| must be <= 0.5")
                s = np.linspace(lo, hi, 257)
                if np.min(self.radius(s)) <= 0:
                    raise ValueError("profile must be positive")

    # -- basic shape -----------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.domain)

    @property
    def transverse_range(self):
        return self.domain[0]

    @property
    def periodic_axes(self):
        return (1,) if self.dim == 2 else ()

    # -- profile functions (vectorised) ----------------------------------

    def weight(self, x):
        """Interval weight w(x); the metric is w^2 dx^2."""
        if self.metric_params.get("weight", "one") == "linear":
            return 1.0 + self.metric_params.get("beta", 0.0) * np.asarray(x, dtype=float)
        return np.ones_like(np.asarray(x, dtype=float))

    def dweight(self, x):
        if self.metric_params.get("weight", "one") == "linear":
            return np.full_like(np.asarray(x, dtype=float), self.metric_params.get("beta", 0.0))
        return np.zeros_like(np.asarray(x, dtype=float))

    def radius(self, s):
        """Azimuthal radius r(s): the metric is ds^2 + r(s)^2 dphi^2."""
        s = np.asarray(s, dtype=float)
        if self.kind == "spherical-band":
            return np.sin(s)
        if self.metric_params.get("profile", "cylinder") == "sine":
            alpha = self.metric_params.get("alpha", 0.0)
            length = self.metric_params.get("length", 1.0)
            return 1.0 + alpha * np.sin(np.pi * s / length)
        return np.ones_like(s)

    def dradius(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "spherical-band":
            return np.cos(s)
        if self.metric_params.get("profile", "cylinder") == "sine":
            alpha = self.metric_params.get("alpha", 0.0)
            k = np.pi / self.metric_params.get("length", 1.0)
            return alpha * k * np.cos(k * s)
        return np.zeros_like(s)

    def ddradius(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "spherical-band":
            return -np.sin(s)
        if self.metric_params.get("profile", "cylinder") == "sine":
            alpha = self.metric_params.get("alpha", 0.0)
            k = np.pi / self.metric_params.get("length", 1.0)
            return -alpha * k * k * np.sin(k * s)
        return np.zeros_like(s)

    def gauss_curvature(self, s):
        return -self.ddradius(s) / self.radius(s)

    # -- metric pieces (vectorised over z of shape (dim, ...)) ------------

    def metric_diag(self, z):
        """Diagonal entries g_ii at z; every shipped metric is diagonal."""
        z = np.asarray(z, dtype=float)
        if self.dim == 1:
            return self.weight(z[0])[None] ** 2
        return np.stack([np.ones_like(z[0]), self.radius(z[0]) ** 2])

    def sqrt_det(self, z):
        z = np.asarray(z, dtype=float)
        if self.dim == 1:
            return self.weight(z[0])
        return self.radius(z[0])

    def arclength(self, x):
        """Riemannian distance from the lower transverse end to coordinate x."""
        x = np.asarray(x, dtype=float)
        lo = self.transverse_range[0]
        if self.dim == 2:
            return x - lo
        half = 0.5 * (x - lo)
        mid = 0.5 * (x + lo)
        nodes = mid[..., None] + half[..., None] * _GL_NODES
        return half * np.sum(self.weight(nodes) * _GL_WEIGHTS, axis=-1)

    def boundary_distance(self, z):
        """Riemannian distance from z to the boundary."""
        z = np.asarray(z, dtype=float)
        lo, hi = self.transverse_range
        if self.dim == 2:
            return np.minimum(z[0] - lo, hi - z[0])
        a = self.arclength(z[0])
        return np.minimum(a, self.arclength(np.float64(hi)) - a)

    def boundary_distance_gradient(self, z):
        """grad_g of the distance to the boundary (away from the midline)."""
        z = np.asarray(z, dtype=float)
        lo, hi = self.transverse_range
        lower = z[0] - lo <= hi - z[0] if self.dim == 2 else (
            self.arclength(z[0]) <= 0.5 * self.arclength(np.float64(hi)))
        sign = np.where(lower, 1.0, -1.0)
        if self.dim == 1:
            return (sign / self.weight(z[0]))[None]
        return np.stack([sign, np.zeros_like(z[0])])

    def transverse_extent(self) -> float:
        """Riemannian length of the transverse coordinate range."""
        lo, hi = self.transverse_range
        return float(self.arclength(np.float64(hi)))

    def volume(self) -> float:
        """Analytic vol_g(M)."""
        lo, hi = self.transverse_range
        if self.dim == 1:
            return self.transverse_extent()
        if self.kind == "spherical-band":
            return TWO_PI * (np.cos(lo) - np.cos(hi))
        # profile is not polynomial; composite rule
        edges = np.linspace(lo, hi, 65)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            nodes = 0.5 * (a + b) + 0.5 * (b - a) * _GL_NODES
            total += 0.5 * (b - a) * np.sum(self.radius(nodes) * _GL_WEIGHTS)
        return TWO_PI * total

    def contains(self, z, tol: float = 1e-12) -> bool:
        z = np.asarray(z, dtype=float)
        lo, hi = self.transverse_range
        scale = tol * max(1.0, abs(lo), abs(hi))
        ok = (z[0] >= lo - scale) & (z[0] <= hi + scale)
        return bool(np.all(ok))

    def wrap(self, z):
        """Map the periodic coordinate into [0, 2 pi)."""
        z = np.array(z, dtype=float, copy=True)
        if self.dim == 2:
            z[1] = np.mod(z[1], TWO_PI)
        return z


# -- constructors ---------------------------------------------------------

def weighted_interval(x_lo=0.0, x_hi=1.0, weight="one", beta=0.0) -> ChartGeometry:
    return ChartGeometry("weighted-interval", ((float(x_lo), float(x_hi)),),
                         ("boundary", "boundary"),
                         {"weight": weight, "beta": float(beta)})


def spherical_band(theta0=np.pi / 4, theta1=np.pi / 2) -> ChartGeometry:
    return ChartGeometry("spherical-band", ((float(theta0), float(theta1)), (0.0, TWO_PI)),
                         ("boundary", "boundary", "periodic", "periodic"), {})


def surface_of_revolution(s_lo=0.0, s_hi=1.0, profile="cylinder", alpha=0.0,
                          length=1.0) -> ChartGeometry:
    return ChartGeometry("surface-of-revolution", ((float(s_lo), float(s_hi)), (0.0, TWO_PI)),
                         ("boundary", "boundary", "periodic", "periodic"),
                         {"profile": profile, "alpha": float(alpha), "length": float(length)})


# -- pointwise structure --------------------------------------------------

@dataclass(frozen=True)
class MetricSample:
    g: np.ndarray
    g_inv: np.ndarray
    sqrt_det: float
    christoffel: np.ndarray  # christoffel[k, i, j] = Gamma^k_ij
    ricci: np.ndarray


def _check_point(geom: ChartGeometry, z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape[0] != geom.dim:
        raise ValueError(f"point has dimension {z.shape[0]}, geometry has {geom.dim}")
    if not geom.contains(z):
        raise DomainError(f"point {z} outside domain {geom.domain}")
    return z


def metric_at(geom: ChartGeometry, z) -> MetricSample:
    """Closed-form metric, inverse, volume density, Christoffel symbols and Ricci tensor at z."""
    z = _check_point(geom, z)
    if geom.dim == 1:
        w = float(geom.weight(z[0]))
        dw = float(geom.dweight(z[0]))
        g = np.array([[w * w]])
        gamma = np.array([[[dw / w]]])
        return MetricSample(g, np.array([[1.0 / (w * w)]]), w, gamma, np.zeros((1, 1)))
    s = z[0]
    r = float(geom.radius(s))
    dr = float(geom.dradius(s))
    g = np.diag([1.0, r * r])
    gamma = np.zeros((2, 2, 2))
    gamma[0, 1, 1] = -r * dr
    gamma[1, 0, 1] = gamma[1, 1, 0] = dr / r
    ricci = float(geom.gauss_curvature(s)) * g
    return MetricSample(g, np.diag([1.0, 1.0 / (r * r)]), r, gamma, ricci)


def inner_product_at(geom: ChartGeometry, z, X, Y) -> float:
    X = np.atleast_1d(np.asarray(X, dtype=float))
    Y = np.atleast_1d(np.asarray(Y, dtype=float))
    if X.shape != (geom.dim,) or Y.shape != (geom.dim,):
        raise ValueError(f"tangent vectors must have {geom.dim} components")
    return float(X @ metric_at(geom, z).g @ Y)


def norm_at(geom: ChartGeometry, z, X) -> float:
    return float(np.sqrt(inner_product_at(geom, z, X, X)))


def unit_outer_normal(geom: ChartGeometry, z, tol: float = 1e-12) -> np.ndarray:
    """Outward unit normal (in g) at a point on a boundary side."""
    z = _check_point(geom, z)
    lo, hi = geom.transverse_range
    scale = tol * max(1.0, abs(lo), abs(hi))
    if abs(z[0] - lo) <= scale:
        sign = -1.0
    elif abs(z[0] - hi) <= scale:
        sign = 1.0
    elif geom.dim == 2 and (abs(z[1]) <= tol or abs(z[1] - TWO_PI) <= tol):
        raise InvalidQueryError("no outer normal on a periodic side")
    else:
        raise InvalidQueryError(f"point {z} is not on a boundary side")
    if geom.dim == 1:
        return np.array([sign / float(geom.weight(z[0]))])
    return np.array([sign, 0.0])


# -- finite-difference differential operators -----------------------------

def _partial(geom: ChartGeometry, fn: Callable, z: np.ndarray, axis: int, h: float):
    """Second-order difference of fn along one axis; one-sided next to a boundary side.

    Returns (derivative, used_one_sided).
    """
    z = np.asarray(z, dtype=float)
    e = np.zeros((geom.dim,) + (1,) * (z.ndim - 1))
    e[axis] = 1.0
    if axis in geom.periodic_axes:
        return (fn(z + h * e) - fn(z - h * e)) / (2 * h), False
    lo, hi = geom.transverse_range
    slack = 1e-12 * max(1.0, abs(lo), abs(hi))
    fwd = z[axis] - h < lo - slack
    bwd = z[axis] + h > hi + slack
    if not (np.any(fwd) or np.any(bwd)):
        return (fn(z + h * e) - fn(z - h * e)) / (2 * h), False
    shift = np.where(fwd, 1.0, np.where(bwd, -1.0, 0.0))
    zc = z + h * shift * e
    fm, f0, fp = fn(zc - h * e), fn(zc), fn(zc + h * e)
    central = (fp - fm) / (2 * h)
    forward = (-3 * fm + 4 * f0 - fp) / (2 * h)   # stencil z, z+h, z+2h
    backward = (fm - 4 * f0 + 3 * fp) / (2 * h)   # stencil z-2h, z-h, z
    out = np.where(fwd, forward, np.where(bwd, backward, central))
    return out, True


def gradient_at(geom: ChartGeometry, u: Callable, z, fd_step: float = DEFAULT_FD_STEP,
                full_output: bool = False):
    """grad_g u = g^{ij} d_j u by finite differences."""
    z = np.asarray(z, dtype=float)
    parts, flag = [], False
    for i in range(geom.dim):
        d, f = _partial(geom, u, z, i, fd_step)
        parts.append(d)
        flag |= f
    grad = np.stack(parts) / geom.metric_diag(z)
    return (grad, flag) if full_output else grad


def div_at(geom: ChartGeometry, X: Callable, z, fd_step: float = DEFAULT_FD_STEP,
           full_output: bool = False):
    """div_g X = (1/sqrt|g|) d_i (X^i sqrt|g|), centred differences of size fd_step.

    With ``full_output`` returns ``(value, one_sided)`` where ``one_sided`` flags
    that a stencil would have left a boundary side.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        _check_point(geom, z)
    total, flag = 0.0, False
    for i in range(geom.dim):
        d, f = _partial(geom, lambda y, i=i: X(y)[i] * geom.sqrt_det(y), z, i, fd_step)
        total = total + d
        flag |= f
    val = total / geom.sqrt_det(z)
    return (val, flag) if full_output else val


def laplace_at(geom: ChartGeometry, u: Callable, z, fd_step: float = DEFAULT_FD_STEP,
               full_output: bool = False):
    """Laplace-Beltrami div_g(grad_g u) by nested differences."""
    flags = []

    def grad(y):
        g, f = gradient_at(geom, u, y, fd_step, full_output=True)
        flags.append(f)
        return g

    val, f = div_at(geom, grad, z, fd_step, full_output=True)
    flag = f or any(flags)
    return (val, flag) if full_output else val


def _hessian_fn(geom: ChartGeometry, u: Callable, h: float):
    """Covariant Hessian T_ab = d_a d_b u - Gamma^k_ab d_k u as a sampler of shape (dim, dim, ...)."""
    n = geom.dim

    def du(y):
        return np.stack([_partial(geom, u, y, j, h)[0] for j in range(n)])

    def hess(y):
        first = du(y)
        second = np.stack([_partial(geom, du, y, a, h)[0] for a in range(n)])  # [a, b]
        gam = _christoffel_field(geom, y)
        return second - np.einsum("kab...,k...->ab...", gam, first)

    return du, hess


def _christoffel_field(geom: ChartGeometry, y):
    y = np.asarray(y, dtype=float)
    shape = y.shape[1:]
    if geom.dim == 1:
        return (geom.dweight(y[0]) / geom.weight(y[0]))[None, None, None]
    r, dr = geom.radius(y[0]), geom.dradius(y[0])
    gam = np.zeros((2, 2, 2) + shape)
    gam[0, 1, 1] = -r * dr
    gam[1, 0, 1] = gam[1, 1, 0] = dr / r
    return gam


def _ricci_field(geom: ChartGeometry, y):
    y = np.asarray(y, dtype=float)
    gd = geom.metric_diag(y)
    if geom.dim == 1:
        return np.zeros((1, 1) + y.shape[1:])
    K = geom.gauss_curvature(y[0])
    ric = np.zeros((2, 2) + y.shape[1:])
    ric[0, 0] = K * gd[0]
    ric[1, 1] = K * gd[1]
    return ric


def commutator_sides(geom: ChartGeometry, u: Callable, z, fd_step: float = DEFAULT_FD_STEP):
    """Return (Delta_g grad u - grad Delta_g u, Ric(grad u, .)) as covector components."""
    z = np.asarray(z, dtype=float)
    h = fd_step
    n = geom.dim
    du, hess = _hessian_fn(geom, u, h)

    def trace_hess(y):
        T = hess(y)
        return sum(T[a, a] / geom.metric_diag(y)[a] for a in range(n))

    gam = _christoffel_field(geom, z)
    T = hess(z)
    dT = np.stack([_partial(geom, hess, z, a, h)[0] for a in range(n)])  # [a, b, j]
    cov = (dT
           - np.einsum("kab...,kj...->abj...", gam, T)
           - np.einsum("kaj...,bk...->abj...", gam, T))
    ginv = 1.0 / geom.metric_diag(z)
    rough = np.einsum("a...,aaj...->j...", ginv, cov)
    grad_lap = np.stack([_partial(geom, trace_hess, z, j, h)[0] for j in range(n)])
    lhs = rough - grad_lap
    ric = _ricci_field(geom, z)
    rhs = np.einsum("jk...,k...,k...->j...", ric, ginv, du(z))
    return lhs, rhs


def commutator_residual_at(geom: ChartGeometry, u: Callable, z,
                           fd_step: float = DEFAULT_FD_STEP) -> float:
    """|Delta_g grad u - grad Delta_g u - Ric(grad u, .)|_g by nested differences."""
    z = _check_point(geom, z)
    lhs, rhs = commutator_sides(geom, u, z, fd_step)
    r = lhs - rhs
    ginv = 1.0 / geom.metric_diag(z)
    return float(np.sqrt(np.sum(ginv * r * r)))
