"""Mirror-symmetrised kernels on the unit box and the quantities built from them.

Points live in ``Lambda = [-1/2, 1/2]^d``. For ``z`` in ``Z^d`` the mirror
map is ``(P_z x)_i = (-1)^{z_i} x_i + z_i``; with a kernel of support radius
below one only ``z`` in ``{-1, 0, 1}^d`` contribute.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import signal

from .kernels import RadialTable, boundary_terms, mirror_sum_apply, mirror_sum_pairs
from .scattering import (
    CutoffScatteringPair,
    PotentialSpec,
    cutoff_pair,
    fourier_batch,
    fourier_mode,
    solve_scattering,
)

TABLE_SAMPLES = 16385


def mirror_point(z: Sequence[int], x: Sequence[float]) -> np.ndarray:
    z = np.asarray(z, dtype=np.int64)
    x = np.asarray(x, dtype=float)
    return np.where(z % 2 == 0, x, -x) + z


def mirror_set(d: int) -> List[Tuple[int, ...]]:
    return list(itertools.product((-1, 0, 1), repeat=d))


@dataclass
class SymmetrizedKernel:
    """``W~(x, y) = sum_z g(P_z x - y)`` for a radial ``g`` supported in ``[0, support]``."""

    g: Callable
    support: float
    d: int
    ghat0: float
    table: RadialTable = field(repr=False)
    breakpoints: Tuple[float, ...] = ()

    def W_tilde(self, x, y) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        return mirror_sum_pairs(x, y, self.table)

    def W(self, x, y) -> np.ndarray:
        """Zero mode removed: ``W = W~ - g_hat(0)``."""
        return self.W_tilde(x, y) - self.ghat0

    def free(self, x, y) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        return self.table(np.linalg.norm(x - y, axis=1))

    def ghat(self, k: Sequence[int]) -> float:
        """``g_hat(pi k)`` in dimension ``d``."""
        p = math.pi * np.asarray(k, dtype=float)
        return fourier_mode(self.g, p, self.support, self.d, self.breakpoints)


def symmetrized_kernel(g: Callable, support: float, d: int = 3, breakpoints: Sequence[float] = (),
                       samples: int = TABLE_SAMPLES) -> SymmetrizedKernel:
    if not 0 < support < 1:
        raise ValueError(f"support radius must lie in (0, 1), got {support}")
    table = RadialTable.from_function(g, support, samples)
    ghat0 = fourier_mode(g, 0.0, support, d, breakpoints)
    return SymmetrizedKernel(g, support, d, ghat0, table, tuple(breakpoints))


def pair_kernel(pair: CutoffScatteringPair, d: int = 3) -> SymmetrizedKernel:
    """Symmetrised kernel of ``omega_{l,lam}``."""
    return symmetrized_kernel(pair.omega, pair.lam, d, _pair_breaks(pair))


def _pair_breaks(pair: CutoffScatteringPair):
    return (pair.sol.R / pair.ell, pair.lam / 2)


# -- Neumann basis on midpoint lattices --------------------------------------------


def lattice(order: int) -> np.ndarray:
    return -0.5 + (np.arange(order) + 0.5) / order


def mode_1d(k: int, t: np.ndarray) -> np.ndarray:
    return np.sqrt(2.0) * np.cos(math.pi * k * (t + 0.5)) if k else np.ones_like(t)


def mode_grid(k: Sequence[int], order: int) -> np.ndarray:
    t = lattice(order)
    out = np.ones(())
    for kc in k:
        out = np.multiply.outer(out, mode_1d(int(kc), t))
    return out


def lattice_points(order: int, d: int) -> np.ndarray:
    t = lattice(order)
    return np.stack(np.meshgrid(*([t] * d), indexing="ij"), -1).reshape(-1, d)


# -- Eq. identity: <phi_p, W~ phi_q> = delta_pq g_hat(p) --------------------------


def _kernel_stencil(kern: SymmetrizedKernel, order: int):
    h = 1.0 / order
    J = int(math.ceil(kern.support / h))
    off = np.arange(-J, J + 1) * h
    r = np.sqrt(sum(np.meshgrid(*([off**2] * kern.d), indexing="ij")))
    return kern.table(r), J


def _mirror_index(z: int, order: int) -> np.ndarray:
    k = np.arange(order)
    return k if z == 0 else (2 * order - 1 - k if z == 1 else -1 - k)


def apply_fft(kern: SymmetrizedKernel, phi: np.ndarray, order: int, stencil=None) -> np.ndarray:
    """``sum_y W~(x, y) phi(y) h^d`` at every lattice node ``x`` by FFT convolution."""
    G, J = stencil if stencil is not None else _kernel_stencil(kern, order)
    psi = signal.fftconvolve(phi, G, mode="full")
    size = order + 2 * J
    out = np.zeros(phi.shape)
    for z in mirror_set(kern.d):
        idx, ok = [], []
        for zc in z:
            w = _mirror_index(zc, order) + J
            valid = (w >= 0) & (w < size)
            idx.append(np.clip(w, 0, size - 1))
            ok.append(valid)
        if not all(v.any() for v in ok):
            continue
        mask = ok[0]
        for v in ok[1:]:
            mask = np.multiply.outer(mask, v)
        out += np.where(mask, psi[np.ix_(*idx)], 0.0)
    return out * (1.0 / order) ** kern.d


def identity_entry(kern: SymmetrizedKernel, p: Sequence[int], q: Sequence[int], order: int = 64,
                   stencil=None) -> float:
    """``int int W~(x, y) phi_p(x) phi_q(y)`` by tensor midpoint quadrature."""
    Wq = apply_fft(kern, mode_grid(q, order), order, stencil)
    return float(np.sum(mode_grid(p, order) * Wq)) * (1.0 / order) ** kern.d


def verify_diagonal_identity(kern: SymmetrizedKernel, p: Sequence[int], q: Sequence[int], order: int = 64) -> float:
    """``|<phi_p, W~ phi_q> - delta_pq g_hat(p)|``."""
    val = identity_entry(kern, p, q, order)
    ref = kern.ghat(p) if tuple(p) == tuple(q) else 0.0
    return abs(val - ref)


@dataclass
class IdentityMatrixResult:
    modes: List[Tuple[int, ...]]
    matrix: np.ndarray
    reference: np.ndarray

    @property
    def offdiag_max(self) -> float:
        m = self.matrix - np.diag(np.diag(self.matrix))
        return float(np.max(np.abs(m)))

    @property
    def diag_residual(self) -> float:
        return float(np.max(np.abs(np.diag(self.matrix) - self.reference)))

    @property
    def residual(self) -> float:
        return max(self.offdiag_max, self.diag_residual)


def identity_matrix(kern: SymmetrizedKernel, max_mode: int = 3, order: int = 64, method: str = "apply") -> IdentityMatrixResult:
    """``<phi_p, W~ phi_q>`` for all modes with components ``<= max_mode``.

    ``method="apply"`` uses the compiled mirror-sum kernel on the full lattice,
    ``"fft"`` the convolution route.
    """
    modes = list(itertools.product(range(max_mode + 1), repeat=kern.d))
    Phi = np.stack([mode_grid(k, order).ravel() for k in modes], axis=1)
    hd = (1.0 / order) ** kern.d
    if method == "apply":
        pts = lattice_points(order, kern.d)
        WPhi = mirror_sum_apply(pts, pts, Phi, kern.table) * hd
    elif method == "fft":
        st = _kernel_stencil(kern, order)
        shape = (order,) * kern.d
        WPhi = np.stack([apply_fft(kern, Phi[:, j].reshape(shape), order, st).ravel() for j in range(len(modes))], 1)
    else:
        raise ValueError(method)
    mat = Phi.T @ WPhi * hd
    ref = np.array([kern.ghat(k) for k in modes])
    return IdentityMatrixResult(modes, mat, ref)


def random_mode_pairs(count: int, d: int, max_mode: int, seed: int = 0) -> List[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    """Seeded ``(p, q)`` pairs; every other pair is diagonal so both cases are covered."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        p = tuple(int(v) for v in rng.integers(0, max_mode + 1, d))
        q = p if i % 2 == 0 else tuple(int(v) for v in rng.integers(0, max_mode + 1, d))
        out.append((p, q))
    return out


def spot_check(kern: SymmetrizedKernel, pairs, order: int = 64) -> List[float]:
    st = _kernel_stencil(kern, order)
    cache: Dict[tuple, np.ndarray] = {}
    hd = (1.0 / order) ** kern.d
    out = []
    for p, q in pairs:
        if q not in cache:
            cache[q] = apply_fft(kern, mode_grid(q, order), order, st)
        val = float(np.sum(mode_grid(p, order) * cache[q])) * hd
        ref = kern.ghat(p) if tuple(p) == tuple(q) else 0.0
        out.append(abs(val - ref))
    return out


def zero_mode_gap(kern: SymmetrizedKernel, order: int, sample_idx: np.ndarray) -> float:
    """``max |W~ - (Q x Q) W~ - g_hat(0)|`` at lattice node pairs, projection by quadrature."""
    shape = (order,) * kern.d
    marg = apply_fft(kern, np.ones(shape), order).ravel()
    total = marg.mean()
    pts = lattice_points(order, kern.d)
    a, b = sample_idx[:, 0], sample_idx[:, 1]
    Wt = kern.W_tilde(pts[a], pts[b])
    Wproj = Wt - marg[a] - marg[b] + total
    return float(np.max(np.abs(Wt - Wproj - kern.ghat0)))


# -- boundary effect --------------------------------------------------------------


@dataclass
class BoundaryEffect:
    n: float
    ell: float
    lam: float
    a0: float
    l1: float
    norms: Dict[float, float]
    integral: float
    interior_value: float
    points: int

    @property
    def consistency_gap(self) -> float:
        """``|int h| <= ||h||_1`` slack; nonnegative when consistent."""
        return self.l1 - abs(self.integral)


def _face_nodes(rho: float, lam: float, gl_order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes in the distance ``s`` to a face, graded toward ``s = 0``."""
    top = 0.5 * (lam + rho)
    br = [0.0, 0.5 * rho]
    s = rho
    while s < top:
        br.append(s)
        s *= 2
    br += [top, 0.5]
    br = sorted(set(b for b in br if b <= 0.5))
    x, w = np.polynomial.legendre.leggauss(gl_order)
    nodes, weights = [], []
    for lo, hi in zip(br[:-1], br[1:]):
        nodes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        weights.append(0.5 * (hi - lo) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def boundary_effect(n: float, ell: float, lam: float, V: PotentialSpec, p_list: Sequence[float] = (2.0,),
                    y_per_range: int = 8, gl_order: int = 6, n_r: int = 8192) -> BoundaryEffect:
    """``h(x) = int_Lambda n V_l(x - y) F(x, y) dy - 8 pi a0 n / l`` with ``F = 1 - W``.

    Uses ``int_{R^3} V_l f_l = 8 pi a0 / l`` to write
    ``h = n [ -int_{Lambda^c} V_l f_l(x - y) - int_Lambda V_l(x - y) sum_{z != 0} omega_{l,lam}(P_z x - y)
    + omega_hat(0) int_Lambda V_l(x - y) ]``, which avoids subtracting two nearly equal numbers.
    The y-integrals use a face-aligned lattice of spacing about ``R/(y_per_range l)``;
    x runs over one octant with graded Gauss-Legendre nodes.
    """
    rho = V.R / ell
    if not 2 * rho < lam <= 1:
        raise ValueError("need 2R/ell < lambda <= 1")
    if V.amplitude == 0:
        return BoundaryEffect(n, ell, lam, 0.0, 0.0, {p: 0.0 for p in p_list}, 0.0, 0.0, 0)
    sol = solve_scattering(V, n_r=n_r)
    pair = cutoff_pair(sol, ell, lam)
    m = int(math.ceil(y_per_range / rho))
    if 1.0 / m >= rho / 2:
        raise ValueError("lattice does not resolve the potential support")
    tabV = RadialTable.from_function(pair.V_ell, rho, TABLE_SAMPLES)
    tabVf = RadialTable.from_function(pair.Vf, rho, TABLE_SAMPLES)
    tabW = RadialTable.from_function(pair.omega, lam, TABLE_SAMPLES)
    ghat0 = fourier_mode(pair.omega, 0.0, lam, 3, _pair_breaks(pair))
    s, ws = _face_nodes(rho, lam, gl_order)
    x1 = 0.5 - s
    X = np.stack(np.meshgrid(x1, x1, x1, indexing="ij"), -1).reshape(-1, 3)
    Wt = np.einsum("i,j,k->ijk", ws, ws, ws).ravel() * 8.0
    T = boundary_terms(X, m, rho, lam, tabV, tabVf, tabW)
    h = n * (-T[:, 0] - T[:, 1] + ghat0 * T[:, 2])
    interior = n * ghat0 * V.integral() / ell
    norms = {}
    for p in p_list:
        norms[p] = float(np.max(np.abs(h))) if np.isinf(p) else float(np.sum(Wt * np.abs(h) ** p) ** (1.0 / p))
    return BoundaryEffect(n, ell, lam, sol.a0, float(np.sum(Wt * np.abs(h))), norms, float(np.sum(Wt * h)),
                          interior, X.shape[0])


# -- kernel decomposition ------------------------------------------------------------


@dataclass
class KernelSplitResult:
    residual: float
    scale: float
    cutoff: int
    terms: Dict[str, np.ndarray] = field(repr=False)

    @property
    def relative(self) -> float:
        return self.residual / self.scale if self.scale > 0 else 0.0


def near_diagonal_pairs(count: int, radius: float, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """``count`` seeded pairs in ``Lambda^2`` with ``|x - y| < radius``."""
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    while len(xs) < count:
        x = rng.uniform(-0.5, 0.5, 3)
        v = rng.normal(size=3)
        y = x + v / np.linalg.norm(v) * radius * rng.uniform() ** (1 / 3)
        if np.all(np.abs(y) <= 0.5):
            xs.append(x)
            ys.append(y)
    return np.array(xs), np.array(ys)


def _mode_sum(coef: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``sum_k coef[k] phi_k(x) phi_k(y)`` over the tensor index set of ``coef``."""
    K = coef.shape[0]
    k = np.arange(K)
    norm = np.where(k == 0, 1.0, np.sqrt(2.0))
    out = np.empty(x.shape[0])
    for a in range(x.shape[0]):
        f = [norm * np.cos(math.pi * k * (x[a, c] + 0.5)) * norm * np.cos(math.pi * k * (y[a, c] + 0.5)) for c in range(3)]
        out[a] = np.einsum("ijk,i,j,k->", coef, f[0], f[1], f[2])
    return out


def kernel_split_residual(n: float, ell: float, lam: float, V: PotentialSpec, xs=None, ys=None,
                          cutoff: int = 48, samples: int = 100, seed: int = 0, n_r: int = 8192) -> KernelSplitResult:
    """``max |K~ - (K_m + 2 Q_eps + 2 Q_bc + n omega_hat(0) V_l)|`` over point pairs.

    ``K~ = n V_l (1 - W)``. ``K_m`` is the mode sum ``sum_p 2 n |p|^2 omega_hat(p) phi_p(x) phi_p(y)``
    over ``p = pi k``, ``0 <= k_i <= cutoff``; ``Q_eps`` and ``Q_bc`` come from
    their mirror sums. ``scale`` is ``max |K~|`` over the samples.
    """
    rho = V.R / ell
    if xs is None:
        xs, ys = near_diagonal_pairs(samples, rho, seed)
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    if V.amplitude == 0:
        z = np.zeros(xs.shape[0])
        return KernelSplitResult(0.0, 0.0, cutoff, {"K": z, "Km": z, "Qeps": z, "Qbc": z, "zero": z})
    sol = solve_scattering(V, n_r=n_r)
    pair = cutoff_pair(sol, ell, lam)
    breaks = _pair_breaks(pair)
    tabW = RadialTable.from_function(pair.omega, lam, TABLE_SAMPLES)
    tabE = RadialTable.from_function(pair.eps, lam, TABLE_SAMPLES)
    tabVf = RadialTable.from_function(pair.Vf, rho, TABLE_SAMPLES)
    ghat0 = fourier_mode(pair.omega, 0.0, lam, 3, breaks)
    r = np.linalg.norm(xs - ys, axis=1)
    Vxy = pair.V_ell(r)
    W = mirror_sum_pairs(xs, ys, tabW) - ghat0
    K = n * Vxy * (1.0 - W)
    k = np.arange(cutoff + 1)
    kk = np.sqrt(k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2)
    uniq, inv = np.unique(kk.ravel(), return_inverse=True)
    p = math.pi * uniq
    what = fourier_batch(pair.omega, p, lam, 3, breaks, order=32)
    coef = (2 * n * p**2 * what)[inv].reshape(kk.shape)
    Km = _mode_sum(coef, xs, ys)
    Qeps = n * mirror_sum_pairs(xs, ys, tabE)
    Qbc = -n * mirror_sum_pairs(xs, ys, tabVf, skip_zero=True) - n * Vxy * mirror_sum_pairs(xs, ys, tabW, skip_zero=True)
    zero = n * ghat0 * Vxy
    res = np.abs(K - (Km + Qeps + Qbc + zero))
    return KernelSplitResult(float(res.max()), float(np.max(np.abs(K))), cutoff,
                             {"K": K, "Km": Km, "Qeps": Qeps, "Qbc": Qbc, "zero": zero})
