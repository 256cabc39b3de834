"""Multiscale Poincare ratios, the staircase family and operator-gap certification."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .grid import Grid, GridError, GridFunction, SubdivisionScheme, local_deviation, lp_norm, mean_over, subdivide, unit_grid
from .spectral import (
    CERT_MARGIN,
    QuadraticForm,
    assemble_local_laplacians,
    assemble_neumann_laplacian,
    neumann_eigenvalue_1d,
    projector_Q,
    smallest_eigenvalue,
    gradient_norm,
    sum_subcube_Q,
)


@dataclass(frozen=True)
class PoincareRatioResult:
    lhs: float
    rhs: float
    ratio: Optional[float]
    p: float
    M: int
    n: int
    d: int

    @property
    def ratio_defined(self) -> bool:
        return self.ratio is not None


@dataclass(frozen=True)
class OperatorGapResult:
    eps: float
    C: float
    eigenvalue: float
    passed: bool


def multiscale_ratio(f: GridFunction, M: int, p: float = 2.0) -> PoincareRatioResult:
    """Both sides of the multiscale Poincare inequality for ``f``.

    ``lhs = ||f - <f>||_p^p`` and
    ``rhs = ||grad f||_p * (ell^-p sum_i ||f - <f>_i||_p^p)^(1 - 1/p)``.
    The ratio is ``None`` when ``rhs`` vanishes.
    """
    if not p > 1:
        raise GridError(f"p must be > 1, got {p}")
    scheme = subdivide(f.grid, M)
    g = f.grid
    lhs = lp_norm(GridFunction(g, f.values - mean_over(f)), p) ** p
    local = lp_norm(local_deviation(f, scheme), p) ** p
    rhs = gradient_norm(f, p) * (scheme.ell ** (-p) * local) ** (1.0 - 1.0 / p)
    scale = max(float(np.max(np.abs(f.values))), 1.0) ** p
    ratio = lhs / rhs if rhs > 1e-14 * scale else None
    return PoincareRatioResult(lhs, rhs, ratio, p, M, g.n, g.d)


# -- staircase --------------------------------------------------------------


def staircase_profile(N: int, t: np.ndarray) -> np.ndarray:
    """``f_N`` as a function of the first coordinate."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    w = 1.0 / (2 * N)
    for j in range(-N, N):
        s = t + j * w
        chi = ((s >= -w) & (s <= 0.0)).astype(float)
        psi = 2 * N * np.maximum(s + 1.0 / (4 * N * N), 0.0) * chi
        out += psi - j * w * chi
    return out


def staircase(N: int, grid: Grid) -> GridFunction:
    """Sample the staircase ``f_N`` (2N steps along ``x_1``, constant in the other axes)."""
    if N < 1:
        raise ValueError("N must be positive")
    need = 16 * N * N
    if grid.n < need or grid.n % (2 * N):
        raise GridError(f"staircase N={N} needs n_per_side >= {need} and divisible by {2 * N}; got {grid.n}")
    t = (grid.mesh()[0] - grid.box.center[0]) / grid.box.L
    return GridFunction(grid, staircase_profile(N, t))


def default_staircase_n(N: int) -> int:
    return 64 * N * N


@dataclass
class SweepResult:
    rows: List[PoincareRatioResult]
    slope: Optional[float]

    @property
    def ratios(self) -> List[Optional[float]]:
        return [r.ratio for r in self.rows]

    @property
    def spread(self) -> float:
        r = [x for x in self.ratios if x is not None]
        return max(r) / min(r) if r else math.nan


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    """Least-squares slope of ``log y`` against ``log x``; ``None`` with fewer than two points."""
    pts = [(a, b) for a, b in zip(x, y) if b is not None and np.isfinite(b) and b > 0 and a > 0]
    if len({a for a, _ in pts}) < 2:
        return None
    lx = np.log([a for a, _ in pts])
    ly = np.log([b for _, b in pts])
    return float(np.polyfit(lx, ly, 1)[0])


def sharpness_sweep(N_list: Sequence[int], p: float = 2.0, d: int = 1,
                    grid_for: Optional[Callable[[int], Grid]] = None) -> SweepResult:
    """``multiscale_ratio(f_N, 2N, p)`` for each ``N`` and the log-log slope against ``N``."""
    grid_for = grid_for or (lambda N: unit_grid(d, default_staircase_n(N)))
    rows = [multiscale_ratio(staircase(N, grid_for(N)), 2 * N, p) for N in N_list]
    return SweepResult(rows, loglog_slope(list(N_list), [r.ratio for r in rows]))


# -- operator gaps ----------------------------------------------------------


class GapProblem:
    """``eps(-Delta) + C sum_i Q_i - Q_Lambda`` with the pieces assembled once."""

    def __init__(self, grid: Grid, M: int):
        self.grid = grid
        self.scheme = subdivide(grid, M)
        self.lap = assemble_neumann_laplacian(grid)
        self.sumQ = sum_subcube_Q(self.scheme)
        self.QL = projector_Q(grid)

    @property
    def ell(self) -> float:
        return self.scheme.ell

    def form(self, eps: float, C: float) -> QuadraticForm:
        return self.lap * eps + self.sumQ * C - self.QL

    def gap(self, eps: float, C: float, **kw) -> OperatorGapResult:
        lam = smallest_eigenvalue(self.form(eps, C), **kw)
        return OperatorGapResult(eps, C, lam, lam >= -CERT_MARGIN)


def operator_gap(grid: Grid, M: int, eps: float, C: float) -> OperatorGapResult:
    if not (eps > 0 and C >= 0):
        raise ValueError("need eps > 0 and C >= 0")
    return GapProblem(grid, M).gap(eps, C)


def least_passing(passes: Callable[[float], bool], rel: float = 1e-3, start: float = 1.0,
                  cap: float = 1e7) -> float:
    """Least ``C >= 0`` with ``passes(C)``, for a verdict monotone in ``C``.

    Doubling brackets the threshold and bisection shrinks the bracket to
    ``rel`` relative width. Returns the upper end, ``0`` when ``C = 0`` passes
    and ``inf`` beyond ``cap``.
    """
    if passes(0.0):
        return 0.0
    lo, hi = 0.0, start
    while not passes(hi):
        lo, hi = hi, 2 * hi
        if hi > cap:
            return math.inf
    while hi - lo > rel * hi:
        mid = 0.5 * (lo + hi)
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return hi


def least_C(problem: GapProblem, eps: float, rel: float = 1e-3) -> float:
    return least_passing(lambda C: problem.gap(eps, C).passed, rel)


@dataclass
class CalibrationRow:
    d: int
    n: int
    M: int
    eps: float
    C_star: float

    @property
    def x(self) -> float:
        return 1.0 / (self.eps * (1.0 / self.M) ** 2)


@dataclass
class CalibrationResult:
    rows: List[CalibrationRow]
    slope: Optional[float]
    tol: float = 0.25

    @property
    def passed(self) -> bool:
        return (self.slope is not None and abs(self.slope - 1.0) <= self.tol
                and all(np.isfinite(r.C_star) for r in self.rows))


def calibrate_constant(grid: Grid, M_list: Sequence[int], eps_list: Sequence[float],
                       eps_relative: bool = True) -> CalibrationResult:
    """Sweep ``C*(eps, M)`` and fit ``log C*`` against ``log(1/(eps ell^2))``.

    With ``eps_relative`` the entries of ``eps_list`` are multiples of ``1/lambda_1``.
    """
    lam1 = float(neumann_eigenvalue_1d(1, grid.n, grid.box.L))
    rows = []
    for M in M_list:
        prob = GapProblem(grid, M)
        for e in eps_list:
            eps = e / lam1 if eps_relative else e
            rows.append(CalibrationRow(grid.d, grid.n, M, eps, least_C(prob, eps)))
    slope = loglog_slope([r.x for r in rows], [r.C_star for r in rows])
    return CalibrationResult(rows, slope)


def implied_gap_quotient(f: GridFunction, M: int, eps: float) -> float:
    """Rayleigh numerator of the gap form on ``f`` at ``C = r^2/(2 eps ell^2)``.

    ``r`` is the measured p=2 ratio of ``f``; the value is nonnegative whenever
    the pointwise inequality holds with that constant.
    """
    res = multiscale_ratio(f, M, 2.0)
    if res.ratio is None:
        raise ValueError("ratio undefined for this f")
    prob = GapProblem(f.grid, M)
    C = res.ratio**2 / (2 * eps * prob.ell**2)
    return f.grid.cell_volume * prob.form(eps, C).value(f.flat)


# -- kinetic energy localization -------------------------------------------


class KineticProblem:
    """``-Delta - ell^(2+a) Q - (1 - C ell^(4+2a)) sum_i (-Delta_i - (pi/8) ell^-2 Q_i)``."""

    def __init__(self, grid: Grid, M: int):
        if not 1.0 / M < 0.5:
            raise ValueError("requires ell = 1/M < 1/2")
        self.grid = grid
        self.scheme = subdivide(grid, M)
        self.lap = assemble_neumann_laplacian(grid)
        self.local = assemble_local_laplacians(self.scheme) - sum_subcube_Q(self.scheme) * (
            (math.pi / 8) / self.scheme.ell**2)
        self.QL = projector_Q(grid)

    def form(self, alpha: float, C: float) -> QuadraticForm:
        ell = self.scheme.ell
        return self.lap - self.QL * ell ** (2 + alpha) - self.local * (1.0 - C * ell ** (4 + 2 * alpha))

    def gap(self, alpha: float, C: float, **kw) -> OperatorGapResult:
        lam = smallest_eigenvalue(self.form(alpha, C), **kw)
        return OperatorGapResult(alpha, C, lam, lam >= -CERT_MARGIN)


def kinetic_localization_gap(grid: Grid, M: int, alpha: float, C: float) -> OperatorGapResult:
    """Certify the kinetic localization bound at ``(alpha, C)``; the ``eps`` slot carries ``alpha``."""
    if alpha < 0 or C < 0:
        raise ValueError("need alpha >= 0 and C >= 0")
    return KineticProblem(grid, M).gap(alpha, C)


def kinetic_least_C(grid: Grid, M: int, alpha: float, rel: float = 1e-3) -> float:
    prob = KineticProblem(grid, M)
    return least_passing(lambda C: prob.gap(alpha, C).passed, rel)


def relatively_stable(a: float, b: float, tol: float = 0.05) -> bool:
    """``|a - b| <= tol * max(|a|, |b|)``; two zeros count as stable."""
    if not (np.isfinite(a) and np.isfinite(b)):
        return False
    return abs(a - b) <= tol * max(abs(a), abs(b))


@dataclass
class RefinementResult:
    n: int
    values: Dict[int, float] = field(default_factory=dict)

    @property
    def stable(self) -> bool:
        return relatively_stable(self.values[self.n], self.values[2 * self.n])


def kinetic_refinement(d: int, n: int, M: int, alpha: float) -> RefinementResult:
    """Least certifying C at ``n`` and ``2n`` nodes per side."""
    out = RefinementResult(n)
    for m in (n, 2 * n):
        out.values[m] = kinetic_least_C(unit_grid(d, m), M, alpha)
    return out
