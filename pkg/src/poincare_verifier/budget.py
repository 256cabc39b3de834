"""Exponent bookkeeping for the dilute-regime condensation argument.

Rational inputs (``Fraction`` or ``int``) are handled exactly, so the frontier at
``kappa = 2/11`` is decided without rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from pathlib import Path
from typing import Iterable, List, Optional, Union

import numpy as np

KAPPA_FRONTIER = Fraction(2, 11)

Number = Union[float, Fraction, int]


def _exact(*xs) -> bool:
    return all(isinstance(x, Rational) for x in xs)


@dataclass(frozen=True)
class RegimeParams:
    kappa: Number
    alpha: Number = 0
    N: int = 1
    K: float = 20.0
    a0: float = 1.0
    C0: float = 1.0

    def __post_init__(self):
        if not 0 <= self.kappa < Fraction(2, 3):
            raise ValueError("kappa must lie in [0, 2/3)")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.N < 1 or self.K < 1:
            raise ValueError("need N >= 1 and K >= 1")


@dataclass(frozen=True)
class ExponentPair:
    e1: Number
    e2: Number

    @property
    def worst(self):
        return max(self.e1, self.e2)


def e2_unsimplified(kappa: Number, alpha: Number) -> Number:
    half, quarter = (Fraction(1, 2), Fraction(1, 4)) if _exact(kappa, alpha) else (0.5, 0.25)
    return (2 + alpha) * kappa * half + (5 * kappa - 2) * half + (2 - 3 * kappa) * quarter


def excitation_exponents(kappa: Number, alpha: Number) -> ExponentPair:
    """``e1 = -alpha kappa / 2``, ``e2 = alpha kappa / 2 + 11 kappa / 4 - 1/2``."""
    if not 0 <= kappa < Fraction(2, 3):
        raise ValueError("kappa must lie in [0, 2/3)")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if _exact(kappa, alpha):
        k, a = Fraction(kappa), Fraction(alpha)
        return ExponentPair(-a * k / 2, a * k / 2 + Fraction(11, 4) * k - Fraction(1, 2))
    k, a = float(kappa), float(alpha)
    return ExponentPair(-a * k / 2, a * k / 2 + 11 * k / 4 - 0.5)


def alpha_ceiling(kappa: Number) -> Number:
    """Largest ``alpha`` (exclusive) keeping ``e2 < 0``: ``(1 - 11 kappa / 2) / kappa``."""
    if kappa <= 0:
        return math.inf
    if _exact(kappa):
        return (1 - Fraction(11, 2) * Fraction(kappa)) / Fraction(kappa)
    return (1 - 5.5 * kappa) / kappa


@dataclass(frozen=True)
class Feasibility:
    kappa: Number
    feasible: bool
    witness: Optional[Number]
    alpha_max: Number
    binding: str

    def as_dict(self):
        f = lambda x: None if x is None else float(x)
        return {"kappa": float(self.kappa), "feasible": self.feasible, "witness": f(self.witness),
                "alpha_max": f(self.alpha_max), "binding": self.binding}


ALPHA_GRID = np.geomspace(1e-3, 10.0, 401)


def bec_feasible(kappa: Number, grid: Optional[Iterable[float]] = None) -> Feasibility:
    """Is there ``alpha > 0`` with both exponents negative?

    Scans a geometric ``alpha`` grid first; if the admissible window is too
    narrow for the grid, the midpoint of ``(0, alpha_max)`` serves as witness.
    """
    if not 0 < kappa < Fraction(2, 3):
        raise ValueError("kappa must lie in (0, 2/3)")
    amax = alpha_ceiling(kappa)
    if amax <= 0:
        return Feasibility(kappa, False, None, amax, "e2 >= 0 for every alpha > 0")
    grid = ALPHA_GRID if grid is None else grid
    for a in grid:
        a = Fraction(a) if _exact(kappa) else float(a)
        if excitation_exponents(kappa, a).worst < 0:
            return Feasibility(kappa, True, a, amax, "none")
    w = amax / 2
    assert excitation_exponents(kappa, w).worst < 0
    return Feasibility(kappa, True, w, amax, "none")


def frontier_by_bisection(lo: float = 0.1, hi: float = 0.3, tol: float = 1e-9) -> float:
    """Float bisection of the ``bec_feasible`` verdict."""
    if not bec_feasible(lo).feasible or bec_feasible(hi).feasible:
        raise ValueError("the bracket must straddle the frontier")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if bec_feasible(mid).feasible:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class FrontierRow:
    kappa: float
    alpha: float
    e1: float
    e2: float
    feasible: bool


def frontier_sweep(kappas: Iterable[Number], alphas: Iterable[Number]) -> List[FrontierRow]:
    rows = []
    for k in kappas:
        for a in alphas:
            e = excitation_exponents(k, a)
            rows.append(FrontierRow(float(k), float(a), float(e.e1), float(e.e2), bool(e.worst < 0)))
    return rows


def write_frontier_csv(rows: Iterable[FrontierRow], path: Union[str, Path]) -> None:
    with open(path, "w") as fh:
        fh.write("kappa,alpha,e1,e2,feasible\n")
        for r in rows:
            fh.write(f"{r.kappa:.17g},{r.alpha:.17g},{r.e1:.17g},{r.e2:.17g},{str(r.feasible).lower()}\n")


# -- cell size and energy thresholds -------------------------------------------


@dataclass(frozen=True)
class CellSize:
    ell: float
    rho_ell3: float


def choose_cell_size(rho: float, a: float, K: float = 20.0) -> CellSize:
    """``ell = 1 / (K sqrt(rho a))``, so ``rho ell^3 = K^-3 (rho a^3)^(-1/2)``."""
    if rho <= 0 or a <= 0:
        raise ValueError("rho and a must be positive")
    if K < 1:
        raise ValueError("K must be >= 1")
    gas = rho * a**3
    if gas >= 1:
        raise ValueError(f"not dilute: rho a^3 = {gas}")
    return CellSize(1.0 / (K * math.sqrt(rho * a)), K**-3 / math.sqrt(gas))


def energy_exponents(kappa: Number):
    """``(1 + kappa, 5 kappa / 2 + (2 - 3 kappa) / 4)``."""
    if _exact(kappa):
        k = Fraction(kappa)
        return 1 + k, Fraction(5, 2) * k + (2 - 3 * k) / 4
    k = float(kappa)
    return 1 + k, 2.5 * k + (2 - 3 * k) / 4


def energy_assumption(N: float, kappa: Number, a0: float, C0: float = 1.0) -> float:
    """``4 pi a0 N^(1+kappa) + C0 N^(5 kappa/2 + (2 - 3 kappa)/4)``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    lead, sub = energy_exponents(kappa)
    return 4 * math.pi * a0 * N ** float(lead) + C0 * N ** float(sub)


def cell_energy_lower_bound(rho: float, a: float, ell: float, S: str = "sqrt", C: float = 1.0) -> float:
    """``-4 pi rho^2 a ell^3 - C rho^2 a ell^3 (rho a^3)^(1/2) S((rho a^3)^(-1/2))``."""
    fn = {"sqrt": math.sqrt, "log": math.log}.get(S)
    if fn is None:
        raise ValueError("S must be 'sqrt' or 'log'")
    gas = rho * a**3
    base = rho**2 * a * ell**3
    return -4 * math.pi * base - C * base * math.sqrt(gas) * fn(1.0 / math.sqrt(gas))
