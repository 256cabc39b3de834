"""Numerical verification of multiscale Poincare inequalities and the dilute Bose gas estimates built on them."""

__version__ = "0.1.0"

from ._accel import HAVE_NUMBA, backend
from .grid import BoxSpec, Grid, GridFunction, SubdivisionScheme, make_grid, subdivide, unit_grid
from .spectral import QuadraticForm, assemble_neumann_laplacian, eigen_lowest, smallest_eigenvalue

__all__ = [
    "__version__",
    "HAVE_NUMBA",
    "backend",
    "BoxSpec",
    "Grid",
    "GridFunction",
    "SubdivisionScheme",
    "make_grid",
    "subdivide",
    "unit_grid",
    "QuadraticForm",
    "assemble_neumann_laplacian",
    "eigen_lowest",
    "smallest_eigenvalue",
]
