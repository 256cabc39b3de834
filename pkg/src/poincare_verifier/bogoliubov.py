"""Per-mode Bogoliubov bounds, truncated Fock-space oracles and the Neumann mode sum."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from scipy import linalg

from .scattering import PotentialSpec, cutoff_pair, fourier_batch, solve_scattering


class BogoliubovError(ValueError):
    pass


@dataclass(frozen=True)
class ModeCoefficients:
    A: float
    B: float

    def check(self) -> "ModeCoefficients":
        if not self.A > abs(self.B):
            raise BogoliubovError(f"bound needs A > |B|, got A={self.A}, B={self.B}")
        return self


def per_mode_deficit(c: ModeCoefficients) -> float:
    """``A - sqrt(A^2 - B^2)`` written as ``B^2 / (A + sqrt(A^2 - B^2))``."""
    c.check()
    A, B = float(c.A), float(c.B)
    # (A - B)(A + B) keeps the small difference exact when |B| is close to A
    return B * B / (A + math.sqrt((A - B) * (A + B)))


def deficit_reference(A, B, digits: int = 60) -> Decimal:
    """Extended-precision ``A - sqrt(A^2 - B^2)`` with the inputs taken as exact binary floats."""
    with localcontext() as ctx:
        ctx.prec = digits
        a, b = Decimal(A), Decimal(B)
        return a - (a * a - b * b).sqrt()


def single_mode_ground_energy(c: ModeCoefficients, n_max: int = 80) -> float:
    """Lowest eigenvalue of ``A a*a + (B/2)(a*a* + aa)`` on occupations ``0..n_max``.

    The Hamiltonian only couples ``n`` to ``n +- 2``, so each parity sector is
    tridiagonal; the even sector holds the ground state but both are checked.
    """
    c.check()
    if n_max < 2:
        raise BogoliubovError("n_max must be >= 2")
    best = math.inf
    for start in (0, 1):
        n = np.arange(start, n_max + 1, 2, dtype=float)
        diag = c.A * n
        off = 0.5 * c.B * np.sqrt((n[:-1] + 1) * (n[:-1] + 2))
        if n.size == 1:
            e = diag[0]
        else:
            e = linalg.eigvalsh_tridiagonal(diag, off, select="i", select_range=(0, 0))[0]
        best = min(best, float(e))
    return best


def two_mode_ground_energy(c: ModeCoefficients, n_max: int = 80) -> float:
    """Lowest eigenvalue of ``A(a+*a+ + a-*a-) + B(a+*a-* + a+a-)`` with ``n+, n- <= n_max``.

    ``n+ - n-`` is conserved; the ground state sits in the sector ``n+ = n-``.
    The untruncated value is ``sqrt(A^2 - B^2) - A``.
    """
    c.check()
    j = np.arange(n_max + 1, dtype=float)
    diag = 2 * c.A * j
    off = c.B * (j[:-1] + 1)
    return float(linalg.eigvalsh_tridiagonal(diag, off, select="i", select_range=(0, 0))[0])


def lhy_coefficient() -> float:
    return 128.0 / (15.0 * math.sqrt(math.pi))


# -- mode sum ------------------------------------------------------------------


@dataclass
class QuadraticModeSystem:
    """Modes ``p = pi k``, ``k`` in ``N_0^3 \\ {0}`` with ``k_i <= cutoff``, for ``n`` particles in a cell of scale ``ell``."""

    n: float
    ell: float
    V: PotentialSpec
    mu: float = math.pi / 2
    cutoff: int = 64
    lam: float = 0.5
    n_r: int = 8192
    a0: float = field(init=False)

    def __post_init__(self):
        self.a0 = solve_scattering(self.V, n_r=self.n_r).a0 if self.V.amplitude > 0 else 0.0

    @property
    def window(self):
        g = 8 * math.pi * self.a0 * self.n / self.ell
        return 2 * g, math.pi - g

    def check_window(self):
        lo, hi = self.window
        if not lo < self.mu < hi:
            raise BogoliubovError(f"mu={self.mu} outside the admissible window ({lo}, {hi})")

    def modes(self, cutoff: Optional[int] = None):
        K = self.cutoff if cutoff is None else cutoff
        k = np.stack(np.meshgrid(*[np.arange(K + 1)] * 3, indexing="ij"), -1).reshape(-1, 3)[1:]
        return k

    def Vf_hat(self, p: np.ndarray) -> np.ndarray:
        """``(V_ell f_ell)^(p)``; zero for the zero potential."""
        if self.V.amplitude == 0:
            return np.zeros_like(p)
        sol = solve_scattering(self.V, n_r=self.n_r)
        pair = cutoff_pair(sol, self.ell, self.lam)
        uniq, inv = np.unique(p, return_inverse=True)
        return fourier_batch(pair.Vf, uniq, self.V.R / self.ell, 3, order=32)[inv]


@dataclass
class ModeSumResult:
    full: float
    simplified: float
    k: np.ndarray = field(repr=False)
    psq: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    deficit: np.ndarray = field(repr=False)
    bad_modes: List[tuple] = field(default_factory=list)

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w") as fh:
            fh.write("k1,k2,k3,psq,Bp,deficit\n")
            for kk, a, b, c in zip(self.k, self.psq, self.B, self.deficit):
                fh.write(f"{kk[0]},{kk[1]},{kk[2]},{a:.17g},{b:.17g},{c:.17g}\n")


def mode_sum_lower_bound(sys: QuadraticModeSystem, cutoff: Optional[int] = None, strict: bool = True) -> ModeSumResult:
    """``-1/2 sum_p (A_p - sqrt(A_p^2 - B_p^2))`` with ``A_p = |p|^2 - mu``, ``B_p = n (V_l f_l)^(p)``.

    Also returns ``-(n^2/4) sum_p |(V_l f_l)^(p)|^2 / |p|^2``. Summation runs in
    lexicographic ``k`` order. Modes with ``A_p <= |B_p|`` are listed in
    ``bad_modes`` and raise unless ``strict`` is off.
    """
    if sys.V.amplitude > 0:
        sys.check_window()
    k = sys.modes(cutoff)
    psq = math.pi**2 * np.sum(k * k, axis=1).astype(float)
    vf = sys.Vf_hat(np.sqrt(psq))
    if np.any(np.abs(sys.n * vf) > 8 * math.pi * sys.a0 * sys.n / sys.ell * (1 + 1e-9) + 1e-300):
        raise BogoliubovError("n |Vf_hat| exceeds 8 pi a0 n / ell")
    A = psq - sys.mu
    B = sys.n * vf
    bad = [tuple(int(v) for v in k[i]) for i in np.flatnonzero(A <= np.abs(B))]
    if bad and strict:
        raise BogoliubovError(f"A_p <= |B_p| at modes {bad[:5]}")
    ok = A > np.abs(B)
    D = np.zeros_like(A)
    D[ok] = B[ok] ** 2 / (A[ok] + np.sqrt((A[ok] - B[ok]) * (A[ok] + B[ok])))
    full = -0.5 * math.fsum(D)
    simplified = -0.25 * sys.n**2 * math.fsum(vf**2 / psq)
    return ModeSumResult(full, simplified, k, psq, B, D, bad)
