"""The grid graph of subcubes: Laplacian, spectral gap, Cheeger constant and the discrete Poincare constant."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .kernels import cheeger_exhaustive
from .spectral import QuadraticForm, _kron_sum, _path_laplacian, eigen_lowest

EXHAUSTIVE_LIMIT = 20


@dataclass(frozen=True)
class GridGraph:
    """Vertices are the ``M^d`` subcubes in C order; ``i ~ j`` when they share a face."""

    M: int
    d: int

    def __post_init__(self):
        if self.M < 1 or self.d not in (1, 2, 3):
            raise ValueError("need M >= 1 and d in {1, 2, 3}")

    @property
    def size(self) -> int:
        return self.M**self.d

    def edges(self) -> np.ndarray:
        idx = np.arange(self.size).reshape((self.M,) * self.d)
        out = []
        for ax in range(self.d):
            lo = [slice(None)] * self.d
            hi = [slice(None)] * self.d
            lo[ax] = slice(0, -1)
            hi[ax] = slice(1, None)
            out.append(np.stack([idx[tuple(lo)].ravel(), idx[tuple(hi)].ravel()], axis=1))
        return np.concatenate(out) if out else np.zeros((0, 2), dtype=int)

    def degrees(self) -> np.ndarray:
        e = self.edges()
        return np.bincount(e.ravel(), minlength=self.size)

    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.size > 1 else 0


def graph_laplacian(g: GridGraph) -> QuadraticForm:
    """Combinatorial Laplacian ``deg u_i - sum_{j~i} u_j``."""
    if g.M == 1:
        return QuadraticForm.zero(1)
    return QuadraticForm(_kron_sum([_path_laplacian(g.M, 1.0)] * g.d))


def path_eigenvalues(M: int) -> np.ndarray:
    return 2.0 * (1.0 - np.cos(np.arange(M) * np.pi / M))


def spectral_gap(g: GridGraph, exact: bool = True) -> float:
    """Second-smallest Laplacian eigenvalue, ``2(1 - cos(pi/M))``.

    With ``exact=False`` it is computed numerically from the assembled form.
    """
    if g.M < 2:
        raise ValueError("the one-vertex graph has no gap")
    if exact:
        return float(2.0 * (1.0 - math.cos(math.pi / g.M)))
    return eigen_lowest(graph_laplacian(g), 2)[1].value


@dataclass(frozen=True)
class CheegerResult:
    lower: float
    upper: float
    exact: bool
    cut: Optional[tuple] = None

    @property
    def value(self) -> float:
        return self.upper


def cheeger_constant(g: GridGraph, use_numba: Optional[bool] = None) -> CheegerResult:
    """``min_S |E(S, S^c)| / min(|S|, |S^c|)``.

    Exhaustive for at most 20 vertices. Larger graphs get the interval
    ``[lambda_2 / 2, best sweep cut]`` along the Fiedler vector.
    """
    n = g.size
    if n < 2:
        raise ValueError("need at least two vertices")
    if n <= EXHAUSTIVE_LIMIT:
        h, mask = cheeger_exhaustive(n, g.edges(), use_numba)
        S = tuple(i for i in range(n) if (mask >> i) & 1)
        return CheegerResult(h, h, True, S)
    lam2 = spectral_gap(g)
    upper, S = _sweep_cut(g)
    return CheegerResult(lam2 / 2.0, upper, False, S)


def _sweep_cut(g: GridGraph):
    # Fiedler direction: the slowest cosine along axis 0 (degenerate levels pick any)
    coords = np.indices((g.M,) * g.d).reshape(g.d, -1)
    fiedler = np.cos(np.pi * (coords[0] + 0.5) / g.M)
    order = np.argsort(-fiedler, kind="stable")
    e = g.edges()
    inside = np.zeros(g.size, dtype=bool)
    best, best_k = math.inf, 0
    for k in range(g.size - 1):
        inside[order[k]] = True
        cut = int(np.sum(inside[e[:, 0]] != inside[e[:, 1]]))
        val = cut / min(k + 1, g.size - k - 1)
        if val < best:
            best, best_k = val, k
    return best, tuple(sorted(int(v) for v in order[: best_k + 1]))


def cheeger_cut_value(g: GridGraph, S: Sequence[int]) -> float:
    inside = np.zeros(g.size, dtype=bool)
    inside[list(S)] = True
    k = int(inside.sum())
    if k in (0, g.size):
        raise ValueError("S must be a proper nonempty subset")
    e = g.edges()
    return int(np.sum(inside[e[:, 0]] != inside[e[:, 1]])) / min(k, g.size - k)


# -- discrete Poincare -----------------------------------------------------


def poincare_sides(g: GridGraph, u: np.ndarray, p: float):
    """``((sum_i |<u> - u_i|^p)^(1/p), (sum_i (sum_{j~i} |u_i - u_j|)^p)^(1/p))``."""
    u = np.asarray(u, dtype=float).ravel()
    lhs = np.sum(np.abs(u.mean() - u) ** p) ** (1.0 / p)
    e = g.edges()
    w = np.abs(u[e[:, 0]] - u[e[:, 1]])
    per_vertex = np.bincount(e[:, 0], weights=w, minlength=g.size) + np.bincount(e[:, 1], weights=w, minlength=g.size)
    rhs = np.sum(per_vertex**p) ** (1.0 / p)
    return float(lhs), float(rhs)


def trial_vectors(g: GridGraph, trials: int, seed: int = 0) -> List[np.ndarray]:
    """Linear profiles along every axis followed by seeded Gaussian vectors."""
    coords = np.indices((g.M,) * g.d).reshape(g.d, -1).astype(float)
    out = [coords[ax] for ax in range(g.d)]
    rng = np.random.default_rng(seed)
    out += [rng.standard_normal(g.size) for _ in range(trials)]
    return out


@dataclass(frozen=True)
class DiscretePoincareResult:
    M: int
    d: int
    p: float
    constant: float
    trials_max: float
    seed: int

    @property
    def per_M(self) -> float:
        return self.constant / self.M


def discrete_poincare_constant(g: GridGraph, p: float = 2.0, trials: int = 64, seed: int = 0) -> DiscretePoincareResult:
    """Best constant ``K`` in ``(sum_i |<u> - u_i|^p)^(1/p) <= K * RHS``.

    For ``p = 2`` it is the exact best constant ``1/sqrt(2 lambda_2)`` of the
    quadratic pair ``||u - <u>||^2`` against ``sum_i sum_{j~i} |u_i - u_j|^2 = 2 u^T L u``.
    That pair dominates the absolute-sum right side, so the value is an upper
    bound for the literal constant; ``trials_max`` holds the literal maximum over
    the trial vectors. For other ``p`` the constant is the trial maximum.
    """
    if not p > 1:
        raise ValueError("p must be > 1")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    best = 0.0
    for u in trial_vectors(g, trials, seed):
        lhs, rhs = poincare_sides(g, u, p)
        if rhs > 0:
            best = max(best, lhs / rhs)
    const = 1.0 / math.sqrt(2.0 * spectral_gap(g)) if p == 2 else best
    return DiscretePoincareResult(g.M, g.d, p, const, best, seed)


def dense_best_constant_p2(g: GridGraph) -> float:
    """Dense oracle: ``sqrt(max ||Qu||^2 / (2 u^T L u))`` by generalized eigenvalues on the mean-zero space."""
    n = g.size
    L = graph_laplacian(g).to_dense()
    # basis of the mean-zero subspace
    B = np.linalg.qr(np.eye(n)[:, 1:] - 1.0 / n, mode="reduced")[0]
    w = np.linalg.eigvalsh(B.T @ (2 * L) @ B)
    return float(1.0 / math.sqrt(w[0]))
