"""Scalar conservation laws on Riemannian manifolds with boundary: BV traces,
vanishing viscosity and entropy solutions on structured chart grids."""

__version__ = "0.1.0"

from .geometry import ChartGeometry, spherical_band, surface_of_revolution, weighted_interval
from .grid import CellField, StructuredGrid, build_grid
from .problem import FluxFamily, InitialSpec, MollifierSpec, Scenario

__all__ = ["ChartGeometry", "spherical_band", "surface_of_revolution", "weighted_interval",
           "CellField", "StructuredGrid", "build_grid", "FluxFamily", "InitialSpec",
           "MollifierSpec", "Scenario", "__version__"]
