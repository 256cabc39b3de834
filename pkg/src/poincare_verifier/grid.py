"""Cell-centred tensor grids on boxes, midpoint quadrature, local means and L^p norms."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class BoxSpec:
    """Axis-aligned box of side ``L`` centred at ``center`` in dimension ``d``."""

    d: int
    L: float = 1.0
    center: Optional[tuple] = None

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise GridError(f"dimension must be 1, 2 or 3, got {self.d}")
        if not self.L > 0:
            raise GridError(f"side length must be positive, got {self.L}")
        c = (0.0,) * self.d if self.center is None else tuple(float(v) for v in self.center)
        if len(c) != self.d:
            raise GridError("center must have d components")
        object.__setattr__(self, "center", c)

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.center) - self.L / 2

    @property
    def volume(self) -> float:
        return self.L ** self.d


@dataclass(frozen=True)
class Grid:
    box: BoxSpec
    n: int

    @property
    def d(self) -> int:
        return self.box.d

    @property
    def h(self) -> float:
        return self.box.L / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n ** self.d

    def axis(self, i: int = 0) -> np.ndarray:
        """Cell-centre coordinates along axis ``i``."""
        k = np.arange(self.n, dtype=float)
        return self.box.center[i] - self.box.L / 2 + (k + 0.5) * self.h

    def mesh(self) -> list:
        """Coordinate arrays of shape ``grid.shape``, one per axis (``ij`` indexing)."""
        return np.meshgrid(*[self.axis(i) for i in range(self.d)], indexing="ij")

    def points(self) -> np.ndarray:
        """Node coordinates as an ``(size, d)`` array in lexicographic node order."""
        return np.stack([m.ravel() for m in self.mesh()], axis=1)

    @property
    def cell_volume(self) -> float:
        return self.h ** self.d


def make_grid(box: BoxSpec, n_per_side: int) -> Grid:
    if int(n_per_side) != n_per_side or n_per_side < 2:
        raise GridError(f"n_per_side must be an integer >= 2, got {n_per_side}")
    return Grid(box, int(n_per_side))


def unit_grid(d: int, n: int, L: float = 1.0) -> Grid:
    """Grid on ``[-L/2, L/2]^d``."""
    return make_grid(BoxSpec(d, L), n)


@dataclass(frozen=True)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size != self.grid.size:
            raise GridError(f"expected {self.grid.size} values, got {v.size}")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise GridError("grid function values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "GridFunction":
        return cls(grid, fn(*grid.mesh()))

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def __add__(self, other):
        if isinstance(other, GridFunction):
            return GridFunction(self.grid, self.values + other.values)
        return GridFunction(self.grid, self.values + other)

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def to_csv(self, path: Union[str, Path]) -> None:
        """Write ``x1[,x2[,x3]],value`` rows in lexicographic node order."""
        pts = self.grid.points()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i + 1}" for i in range(self.grid.d)] + ["value"])
            for p, v in zip(pts, self.flat):
                w.writerow([format(x, ".17g") for x in p] + [format(v, ".17g")])


def read_grid_function_csv(path: Union[str, Path], box: BoxSpec) -> GridFunction:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n = round(len(data) ** (1.0 / box.d))
    grid = make_grid(box, n)
    if not np.allclose(data[:, : box.d], grid.points(), atol=1e-12):
        raise GridError("CSV node coordinates do not match a cell-centred grid on the box")
    return GridFunction(grid, data[:, box.d])


@dataclass(frozen=True)
class SubdivisionScheme:
    """Partition of the grid nodes into ``M^d`` subcubes of side ``L/M``.

    ``labels`` holds, per node, the C-order index of its subcube. Subcube ``j``
    along an axis is the half-open interval ``[lo + j*ell, lo + (j+1)*ell)``, the
    last one closed.
    """

    grid: Grid
    M: int
    labels: np.ndarray = field(repr=False)

    @property
    def ell(self) -> float:
        return self.grid.box.L / self.M

    @property
    def count(self) -> int:
        return self.M ** self.grid.d

    def mask(self, i: int) -> np.ndarray:
        return self.labels == i

    def block_size(self) -> int:
        return (self.grid.n // self.M) ** self.grid.d


def subdivide(grid: Grid, M: int) -> SubdivisionScheme:
    if M < 1 or grid.n % M:
        raise GridError(f"M={M} must divide n_per_side={grid.n}")
    ell = grid.box.L / M
    idx = []
    for i in range(grid.d):
        j = np.floor((grid.axis(i) - grid.box.lower[i]) / ell).astype(np.int64)
        idx.append(np.clip(j, 0, M - 1))
    per_axis = np.meshgrid(*idx, indexing="ij")
    labels = np.ravel_multi_index(tuple(a.ravel() for a in per_axis), (M,) * grid.d)
    return SubdivisionScheme(grid, M, labels.reshape(grid.shape))


Region = Union[None, int, np.ndarray]


def _region_mask(f: GridFunction, region: Region, scheme: Optional[SubdivisionScheme]) -> np.ndarray:
    if region is None:
        return np.ones(f.grid.shape, dtype=bool)
    if isinstance(region, np.ndarray):
        return region.reshape(f.grid.shape)
    if scheme is None:
        raise GridError("a subcube index needs a SubdivisionScheme")
    return scheme.mask(int(region))


def integrate(f: GridFunction, region: Region = None, scheme: Optional[SubdivisionScheme] = None) -> float:
    """Midpoint rule: ``h^d * sum(values)`` over the region."""
    m = _region_mask(f, region, scheme)
    return float(f.grid.cell_volume * f.values[m].sum())


def mean_over(f: GridFunction, region: Region = None, scheme: Optional[SubdivisionScheme] = None) -> float:
    m = _region_mask(f, region, scheme)
    if not m.any():
        raise GridError("empty region")
    return float(f.values[m].mean())


def lp_norm(
    f: GridFunction, p: float, region: Region = None, scheme: Optional[SubdivisionScheme] = None
) -> float:
    if not p >= 1:
        raise GridError(f"p must be >= 1, got {p}")
    m = _region_mask(f, region, scheme)
    a = np.abs(f.values[m])
    if np.isinf(p):
        return float(a.max()) if a.size else 0.0
    return float((f.grid.cell_volume * np.sum(a**p)) ** (1.0 / p))


def subcube_means(f: GridFunction, scheme: SubdivisionScheme) -> np.ndarray:
    """Vector of the ``M^d`` subcube means (C-order subcube index)."""
    sums = np.bincount(scheme.labels.ravel(), weights=f.flat, minlength=scheme.count)
    counts = np.bincount(scheme.labels.ravel(), minlength=scheme.count)
    return sums / counts


def local_deviation(f: GridFunction, scheme: SubdivisionScheme) -> GridFunction:
    """``f - <f>_{Lambda_i}`` on each subcube."""
    means = subcube_means(f, scheme)
    return GridFunction(f.grid, f.values - means[scheme.labels])


def points_in_box(points: Sequence, box: BoxSpec) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lo = box.lower
    return np.all((pts >= lo) & (pts <= lo + box.L), axis=1)
