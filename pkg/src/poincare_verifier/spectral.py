"""Discrete Neumann Laplacians, subcube projectors and low eigenpairs.

A :class:`QuadraticForm` is stored as a sparse symmetric matrix plus a few
low-rank terms ``U diag(D) U^T``. The projectors ``P_A`` are rank one, so
``sum_i Q_i`` and ``Q_Lambda`` never need a dense matrix, and the shift-invert
eigensolver inverts the low-rank part with the Woodbury identity.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import Grid, GridError, GridFunction, SubdivisionScheme

CERT_MARGIN = 1e-6
EIG_TOL = 1e-8
DENSE_LIMIT = 1500


class EigenSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class LowRank:
    """``U diag(coef) U^T`` with ``U`` an ``(N, r)`` matrix (sparse or dense)."""

    U: object
    coef: np.ndarray

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.U @ (self.coef * (self.U.T @ v))

    def scaled(self, c: float) -> "LowRank":
        return LowRank(self.U, c * self.coef)

    def dense_U(self) -> np.ndarray:
        return self.U.toarray() if sp.issparse(self.U) else np.asarray(self.U)

    def gram_norm(self) -> float:
        """Largest eigenvalue of ``U^T U``."""
        G = self.U.T @ self.U
        G = G.toarray() if sp.issparse(G) else np.asarray(G)
        return float(np.linalg.eigvalsh(G)[-1]) if G.size else 0.0


@dataclass
class QuadraticForm:
    """Symmetric form on node vectors: ``A = S + sum_t U_t diag(c_t) U_t^T``."""

    sparse: sp.csr_matrix
    lowrank: List[LowRank] = field(default_factory=list)
    grid: Optional[Grid] = None

    def __post_init__(self):
        self.sparse = sp.csr_matrix(self.sparse)
        n0, n1 = self.sparse.shape
        if n0 != n1:
            raise ValueError("form matrix must be square")

    @property
    def n(self) -> int:
        return self.sparse.shape[0]

    @classmethod
    def zero(cls, n: int, grid: Optional[Grid] = None) -> "QuadraticForm":
        return cls(sp.csr_matrix((n, n)), [], grid)

    @classmethod
    def identity(cls, n: int, grid: Optional[Grid] = None) -> "QuadraticForm":
        return cls(sp.identity(n, format="csr"), [], grid)

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v.flat if isinstance(v, GridFunction) else v, dtype=float)
        out = self.sparse @ v
        for t in self.lowrank:
            out = out + t.apply(v)
        return out

    __call__ = matvec

    def value(self, u, v=None) -> float:
        """``<u, A v>`` in the plain Euclidean pairing of node vectors."""
        u = np.asarray(u.flat if isinstance(u, GridFunction) else u, dtype=float)
        v = u if v is None else np.asarray(v.flat if isinstance(v, GridFunction) else v, dtype=float)
        return float(u @ self.matvec(v))

    def _grid_of(self, other):
        return self.grid if self.grid is not None else other.grid

    def __add__(self, other: "QuadraticForm") -> "QuadraticForm":
        if other.n != self.n:
            raise ValueError("size mismatch")
        return QuadraticForm(self.sparse + other.sparse, self.lowrank + other.lowrank, self._grid_of(other))

    def __mul__(self, c: float) -> "QuadraticForm":
        c = float(c)
        return QuadraticForm(self.sparse * c, [t.scaled(c) for t in self.lowrank], self.grid)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other: "QuadraticForm") -> "QuadraticForm":
        return self + (-other)

    def shifted(self, c: float) -> "QuadraticForm":
        """``A + c I``."""
        return QuadraticForm(self.sparse + c * sp.identity(self.n, format="csr"), list(self.lowrank), self.grid)

    def to_dense(self) -> np.ndarray:
        A = self.sparse.toarray()
        for t in self.lowrank:
            U = t.dense_U()
            A += (U * t.coef) @ U.T
        return A

    def linear_operator(self) -> spla.LinearOperator:
        return spla.LinearOperator((self.n, self.n), matvec=self.matvec, rmatvec=self.matvec, dtype=float)

    def lower_bound(self) -> float:
        """Guaranteed lower bound on the spectrum (Gershgorin plus negative low-rank parts)."""
        S = self.sparse
        diag = S.diagonal()
        offsum = np.asarray(abs(S).sum(axis=1)).ravel() - np.abs(diag)
        lb = float(np.min(diag - offsum)) if self.n else 0.0
        for t in self.lowrank:
            neg = min(0.0, float(np.min(t.coef))) if t.coef.size else 0.0
            if neg < 0:
                lb += neg * t.gram_norm()
        return lb

    def norm_bound(self) -> float:
        S = self.sparse
        nb = float(np.max(np.asarray(abs(S).sum(axis=1)).ravel())) if self.n else 0.0
        for t in self.lowrank:
            if t.coef.size:
                nb += float(np.max(np.abs(t.coef))) * t.gram_norm()
        return nb

    def to_coo_text(self, path: Union[str, Path]) -> None:
        """Write the explicit matrix as ``row col value`` lines, zero based."""
        A = sp.coo_matrix(self.sparse)
        if self.lowrank:
            A = sp.coo_matrix(self.to_dense())
            A.eliminate_zeros()
        order = np.lexsort((A.col, A.row))
        with open(path, "w") as fh:
            for i in order:
                fh.write(f"{A.row[i]} {A.col[i]} {A.data[i]:.17g}\n")


def read_coo_text(path: Union[str, Path], n: int) -> sp.csr_matrix:
    data = np.loadtxt(path, ndmin=2)
    if data.size == 0:
        return sp.csr_matrix((n, n))
    return sp.csr_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=(n, n))


# -- assembly ---------------------------------------------------------------


def _path_laplacian(n: int, h: float, block: Optional[int] = None) -> sp.csr_matrix:
    """1-D ghost-node Neumann stencil. ``block`` cuts the couplings between blocks."""
    off = -np.ones(n - 1)
    if block is not None:
        off[np.arange(1, n) % block == 0] = 0.0
    deg = np.zeros(n)
    deg[:-1] -= off
    deg[1:] -= off
    return sp.diags([off, deg, off], [-1, 0, 1], format="csr") / h**2


def _kron_sum(mats: Sequence[sp.spmatrix]) -> sp.csr_matrix:
    out = None
    n = [m.shape[0] for m in mats]
    for i, m in enumerate(mats):
        left = sp.identity(int(np.prod(n[:i])), format="csr")
        right = sp.identity(int(np.prod(n[i + 1:])), format="csr")
        term = sp.kron(sp.kron(left, m), right, format="csr")
        out = term if out is None else out + term
    return out.tocsr()


def assemble_neumann_laplacian(grid: Grid) -> QuadraticForm:
    """``-Delta^Neu`` by the cell-centred reflection stencil, as a node-vector matrix."""
    L1 = _path_laplacian(grid.n, grid.h)
    return QuadraticForm(_kron_sum([L1] * grid.d), [], grid)


def assemble_local_laplacians(scheme: SubdivisionScheme) -> QuadraticForm:
    """Direct sum of the subcube Neumann Laplacians (internal face couplings dropped)."""
    grid = scheme.grid
    L1 = _path_laplacian(grid.n, grid.h, block=grid.n // scheme.M)
    return QuadraticForm(_kron_sum([L1] * grid.d), [], grid)


def neumann_eigenvalue_1d(k, n: int, L: float = 1.0):
    """Exact spectrum of the 1-D stencil: ``(4/h^2) sin^2(k pi h / (2L))``."""
    h = L / n
    return 4.0 / h**2 * np.sin(np.asarray(k) * np.pi * h / (2 * L)) ** 2


def _indicator_columns(labels: np.ndarray, count: int) -> sp.csc_matrix:
    labels = labels.ravel()
    sizes = np.bincount(labels, minlength=count).astype(float)
    if np.any(sizes == 0):
        raise GridError("empty region")
    vals = 1.0 / np.sqrt(sizes[labels])
    N = labels.size
    return sp.csc_matrix((vals, (np.arange(N), labels)), shape=(N, count))


def projector_P(grid: Grid, region: Union[None, int, np.ndarray] = None,
                scheme: Optional[SubdivisionScheme] = None) -> QuadraticForm:
    mask = _mask(grid, region, scheme)
    U = _indicator_columns(np.zeros(int(mask.sum()), dtype=int), 1)
    U = _embed_rows(U, mask)
    return QuadraticForm(sp.csr_matrix((grid.size, grid.size)), [LowRank(U, np.ones(1))], grid)


def projector_Q(grid: Grid, region: Union[None, int, np.ndarray] = None,
                scheme: Optional[SubdivisionScheme] = None) -> QuadraticForm:
    """``Q_A = 1_A - P_A`` with ``P_A`` the projection onto constants on ``A``.

    ``region`` is ``None`` (whole box), a subcube index of ``scheme`` or a boolean mask.
    """
    mask = _mask(grid, region, scheme)
    P = projector_P(grid, mask)
    return QuadraticForm(sp.diags(mask.ravel().astype(float), format="csr"), [], grid) - P


def sum_subcube_Q(scheme: SubdivisionScheme) -> QuadraticForm:
    """``sum_i Q_{Lambda_i} = 1 - sum_i P_{Lambda_i}``."""
    grid = scheme.grid
    U = _indicator_columns(scheme.labels, scheme.count)
    return QuadraticForm(sp.identity(grid.size, format="csr"), [LowRank(U, -np.ones(scheme.count))], grid)


def _mask(grid, region, scheme) -> np.ndarray:
    if region is None:
        m = np.ones(grid.size, dtype=bool)
    elif isinstance(region, np.ndarray):
        m = region.ravel().astype(bool)
    else:
        if scheme is None:
            raise GridError("a subcube index needs a SubdivisionScheme")
        m = scheme.mask(int(region)).ravel()
    if not m.any():
        raise GridError("empty region")
    return m


def _embed_rows(U: sp.spmatrix, mask: np.ndarray) -> sp.csc_matrix:
    rows = np.flatnonzero(mask)
    U = sp.coo_matrix(U)
    return sp.csc_matrix((U.data, (rows[U.row], U.col)), shape=(mask.size, U.shape[1]))


# -- eigen solver -----------------------------------------------------------


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: Union[GridFunction, np.ndarray]
    residual: float


def _woodbury_inverse(form: QuadraticForm, sigma: float):
    N = form.n
    lu = spla.splu((form.sparse - sigma * sp.identity(N, format="csr")).tocsc())
    terms = [t for t in form.lowrank if t.coef.size]
    if not terms:
        return lambda x: lu.solve(x)
    U = sp.hstack([sp.csc_matrix(t.U) if sp.issparse(t.U) else sp.csc_matrix(np.asarray(t.U)) for t in terms]).tocsc()
    D = np.concatenate([t.coef for t in terms])
    keep = D != 0
    U, D = U[:, keep], D[keep]
    if D.size == 0:
        return lambda x: lu.solve(x)
    SiU = lu.solve(U.toarray())
    cap = np.diag(1.0 / D) + (U.T @ SiU)
    cap_lu = sla.lu_factor(cap)

    def apply(x):
        y = lu.solve(x)
        return y - SiU @ sla.lu_solve(cap_lu, U.T @ y)

    return apply


def eigen_lowest(form: QuadraticForm, k: int = 1, seed: int = 0, tol: float = EIG_TOL,
                 maxiter: Optional[int] = None, dense_limit: int = DENSE_LIMIT) -> List[EigenPair]:
    """The ``k`` algebraically smallest eigenpairs, ascending.

    Small forms go through dense ``eigh``. Larger ones use ARPACK in
    shift-invert mode about a guaranteed lower bound of the spectrum, with the
    low-rank part handled by Woodbury. Every pair is checked against
    ``||Av - lam v|| <= tol * ||A||``.
    """
    N = form.n
    if not 1 <= k <= N:
        raise ValueError(f"k must be in [1, {N}]")
    anorm = max(form.norm_bound(), 1.0)
    if N <= dense_limit or k >= N - 1:
        w, V = sla.eigh(form.to_dense(), subset_by_index=[0, k - 1])
    else:
        sigma = form.lower_bound() - 1.0
        inv = _woodbury_inverse(form, sigma)
        OP = spla.LinearOperator((N, N), matvec=inv, dtype=float)
        v0 = np.random.default_rng(seed).standard_normal(N)
        try:
            w, V = spla.eigsh(form.linear_operator(), k=k, sigma=sigma, which="LM", OPinv=OP,
                              v0=v0, tol=tol * 1e-4, maxiter=maxiter)
        except spla.ArpackNoConvergence as exc:
            raise EigenSolverError(f"eigsh did not converge: {len(exc.eigenvalues)} of {k} pairs") from exc
        order = np.argsort(w)
        w, V = w[order], V[:, order]
    out = []
    for lam, v in zip(w, V.T):
        v = v / np.linalg.norm(v)
        res = float(np.linalg.norm(form.matvec(v) - lam * v))
        if res > tol * anorm:
            raise EigenSolverError(f"residual {res:.3e} exceeds {tol:g} * ||A|| = {tol * anorm:.3e}")
        vec = GridFunction(form.grid, v) if form.grid is not None else v
        out.append(EigenPair(float(lam), vec, res))
    return out


def smallest_eigenvalue(form: QuadraticForm, **kw) -> float:
    return eigen_lowest(form, 1, **kw)[0].value


# -- Neumann basis and energies ---------------------------------------------


def neumann_mode(grid: Grid, k: Iterable[int]) -> GridFunction:
    """Sample ``phi_p``, ``p = pi k``, normalised in ``L^2`` of the box."""
    k = tuple(int(v) for v in k)
    if len(k) != grid.d or min(k) < 0:
        raise ValueError("mode index needs d nonnegative components")
    L = grid.box.L
    vals = np.ones(grid.shape)
    for i, (ki, xi) in enumerate(zip(k, grid.mesh())):
        t = (xi - grid.box.lower[i]) / L
        vals = vals * (np.sqrt(2.0) * np.cos(np.pi * ki * t) if ki else 1.0) / np.sqrt(L)
    return GridFunction(grid, vals)


def _node_gradient(f: GridFunction) -> np.ndarray:
    """Per-node gradient, each component the mean of the adjacent interior forward differences."""
    g = np.zeros((f.grid.d,) + f.grid.shape)
    for ax in range(f.grid.d):
        fd = np.diff(f.values, axis=ax) / f.grid.h
        pad = [(0, 0)] * f.grid.d
        pad[ax] = (1, 1)
        faces = np.pad(fd, pad, constant_values=np.nan)
        sl_lo = [slice(None)] * f.grid.d
        sl_hi = [slice(None)] * f.grid.d
        sl_lo[ax] = slice(0, -1)
        sl_hi[ax] = slice(1, None)
        g[ax] = np.nanmean(np.stack([faces[tuple(sl_lo)], faces[tuple(sl_hi)]]), axis=0)
    return g


def dirichlet_energy(f: GridFunction, p: float = 2.0) -> float:
    """``||grad f||_p^p``; for ``p = 2`` exactly ``<f, -Delta^Neu f>``."""
    if not p >= 1:
        raise GridError(f"p must be >= 1, got {p}")
    grid = f.grid
    if p == 2:
        return grid.cell_volume * assemble_neumann_laplacian(grid).value(f.flat)
    g = _node_gradient(f)
    mag = np.sqrt(np.sum(g**2, axis=0))
    return float(grid.cell_volume * np.sum(mag**p))


def gradient_norm(f: GridFunction, p: float = 2.0) -> float:
    return dirichlet_energy(f, p) ** (1.0 / p)
