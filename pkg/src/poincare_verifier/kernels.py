"""Hot inner loops, each in a numba flavour and a numpy flavour.

The public wrappers dispatch on :data:`poincare_verifier._accel.HAVE_NUMBA`.
Both flavours are importable directly so tests and the benchmark can compare
them.
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import HAVE_NUMBA, jit

# -- Cheeger enumeration ----------------------------------------------------


@jit
def _cheeger_numba(nv, eu, ev):
    best = np.inf
    best_mask = 0
    ne = eu.shape[0]
    # the last vertex stays outside S, so each bipartition is visited once
    for mask in range(1, 1 << (nv - 1)):
        size = 0
        m = mask
        while m:
            m &= m - 1
            size += 1
        small = min(size, nv - size)
        cut = 0
        for e in range(ne):
            if ((mask >> eu[e]) & 1) != ((mask >> ev[e]) & 1):
                cut += 1
        val = cut / small
        if val < best:
            best = val
            best_mask = mask
    return best, best_mask


def _cheeger_numpy(nv, eu, ev, chunk=1 << 16):
    best, best_mask = np.inf, 0
    shifts = np.arange(nv, dtype=np.int64)
    total = 1 << (nv - 1)
    for start in range(1, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = (masks[:, None] >> shifts) & 1
        size = bits.sum(axis=1)
        small = np.minimum(size, nv - size)
        cut = (bits[:, eu] != bits[:, ev]).sum(axis=1)
        val = cut / small
        i = int(np.argmin(val))
        if val[i] < best:
            best, best_mask = float(val[i]), int(masks[i])
    return best, best_mask


def cheeger_exhaustive(nv, edges, use_numba=None):
    """Edge-expansion Cheeger constant by exhaustive search; returns ``(h, mask of S)``."""
    if nv < 2:
        raise ValueError("need at least two vertices")
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    eu, ev = edges[:, 0].copy(), edges[:, 1].copy()
    use_numba = HAVE_NUMBA if use_numba is None else use_numba
    fn = _cheeger_numba if use_numba else _cheeger_numpy
    h, mask = fn(nv, eu, ev)
    return float(h), int(mask)


# -- radial tables ----------------------------------------------------------


@jit
def _hermite_eval_numba(r, dr, vals, slopes, support):
    out = np.empty(r.shape[0])
    n = vals.shape[0]
    for i in range(r.shape[0]):
        ri = r[i]
        if ri >= support:
            out[i] = 0.0
            continue
        s = ri / dr
        k = int(s)
        if k >= n - 1:
            k = n - 2
        t = s - k
        t2 = t * t
        t3 = t2 * t
        out[i] = ((2 * t3 - 3 * t2 + 1) * vals[k] + (t3 - 2 * t2 + t) * dr * slopes[k]
                  + (-2 * t3 + 3 * t2) * vals[k + 1] + (t3 - t2) * dr * slopes[k + 1])
    return out


def _hermite_eval_numpy(r, dr, vals, slopes, support):
    r = np.asarray(r, dtype=float)
    s = r / dr
    k = np.minimum(s.astype(np.int64), vals.shape[0] - 2)
    t = s - k
    t2, t3 = t * t, t * t * t
    out = ((2 * t3 - 3 * t2 + 1) * vals[k] + (t3 - 2 * t2 + t) * dr * slopes[k]
           + (-2 * t3 + 3 * t2) * vals[k + 1] + (t3 - t2) * dr * slopes[k + 1])
    return np.where(r >= support, 0.0, out)


class RadialTable:
    """Uniform radial samples on ``[0, support]`` with cubic Hermite interpolation.

    Zero at and beyond ``support``. Slopes come from ``np.gradient`` unless given.
    """

    def __init__(self, r_max, values, slopes=None, support=None):
        values = np.ascontiguousarray(values, dtype=float)
        if values.size < 2:
            raise ValueError("need at least two samples")
        self.dr = float(r_max) / (values.size - 1)
        self.values = values
        self.slopes = np.ascontiguousarray(
            np.gradient(values, self.dr, edge_order=2) if slopes is None else slopes, dtype=float)
        self.support = float(r_max if support is None else support)

    @classmethod
    def from_function(cls, fn, support, n=4097, dfn=None):
        r = np.linspace(0.0, support, n)
        return cls(support, fn(r), None if dfn is None else dfn(r), support)

    def __call__(self, r, use_numba=None):
        r = np.asarray(r, dtype=float)
        flat = np.ascontiguousarray(np.abs(r).ravel())
        use_numba = HAVE_NUMBA if use_numba is None else use_numba
        fn = _hermite_eval_numba if use_numba else _hermite_eval_numpy
        return fn(flat, self.dr, self.values, self.slopes, self.support).reshape(r.shape)

    def args(self):
        return self.dr, self.values, self.slopes, self.support


# -- mirror-summed kernel matrix ---------------------------------------------


@jit
def _mirror_matrix_numba(xs, ys, dr, vals, slopes, support):
    # xs, ys: (N, d) nodes in the unit box centred at 0; mirrors z in {-1,0,1}^d
    nx = xs.shape[0]
    ny = ys.shape[0]
    d = xs.shape[1]
    nz = 3**d
    out = np.zeros((nx, ny))
    nvals = vals.shape[0]
    px = np.empty(d)
    for a in range(nx):
        for zi in range(nz):
            code = zi
            for c in range(d):
                z = code % 3 - 1
                code //= 3
                if z == 0:
                    px[c] = xs[a, c]
                else:
                    px[c] = z - xs[a, c]
            for b in range(ny):
                r2 = 0.0
                for c in range(d):
                    diff = px[c] - ys[b, c]
                    r2 += diff * diff
                r = math.sqrt(r2)
                if r >= support:
                    continue
                s = r / dr
                k = int(s)
                if k >= nvals - 1:
                    k = nvals - 2
                t = s - k
                t2 = t * t
                t3 = t2 * t
                out[a, b] += ((2 * t3 - 3 * t2 + 1) * vals[k] + (t3 - 2 * t2 + t) * dr * slopes[k]
                              + (-2 * t3 + 3 * t2) * vals[k + 1] + (t3 - t2) * dr * slopes[k + 1])
    return out


def _mirror_matrix_numpy(xs, ys, dr, vals, slopes, support):
    d = xs.shape[1]
    out = np.zeros((xs.shape[0], ys.shape[0]))
    for zi in range(3**d):
        code, z = zi, np.empty(d)
        for c in range(d):
            z[c] = code % 3 - 1
            code //= 3
        px = np.where(z == 0, xs, z - xs)
        for a0 in range(0, xs.shape[0], 256):
            diff = px[a0:a0 + 256, None, :] - ys[None, :, :]
            r = np.sqrt(np.sum(diff * diff, axis=-1))
            out[a0:a0 + 256] += _hermite_eval_numpy(r.ravel(), dr, vals, slopes, support).reshape(r.shape)
    return out


def mirror_sum_matrix(xs, ys, table: RadialTable, use_numba=None):
    """``W[a, b] = sum_z g(P_z(x_a) - y_b)`` over ``z in {-1,0,1}^d`` for the unit box.

    ``P_z`` reflects coordinate ``c`` to ``z_c - x_c`` when ``z_c != 0``, the
    mirror map written for boxes centred at the origin.
    """
    xs = np.ascontiguousarray(xs, dtype=float)
    ys = np.ascontiguousarray(ys, dtype=float)
    use_numba = HAVE_NUMBA if use_numba is None else use_numba
    fn = _mirror_matrix_numba if use_numba else _mirror_matrix_numpy
    return fn(xs, ys, *table.args())


@jit
def _mirror_pairs_numba(xs, ys, dr, vals, slopes, support, skip_zero):
    n = xs.shape[0]
    d = xs.shape[1]
    out = np.zeros(n)
    nvals = vals.shape[0]
    for a in range(n):
        acc = 0.0
        for zi in range(3**d):
            code = zi
            r2 = 0.0
            nonzero = False
            for c in range(d):
                z = code % 3 - 1
                code //= 3
                if z == 0:
                    diff = xs[a, c] - ys[a, c]
                else:
                    nonzero = True
                    diff = z - xs[a, c] - ys[a, c]
                r2 += diff * diff
            if skip_zero and not nonzero:
                continue
            r = math.sqrt(r2)
            if r >= support:
                continue
            s = r / dr
            k = int(s)
            if k >= nvals - 1:
                k = nvals - 2
            t = s - k
            t2 = t * t
            t3 = t2 * t
            acc += ((2 * t3 - 3 * t2 + 1) * vals[k] + (t3 - 2 * t2 + t) * dr * slopes[k]
                    + (-2 * t3 + 3 * t2) * vals[k + 1] + (t3 - t2) * dr * slopes[k + 1])
        out[a] = acc
    return out


def _mirror_pairs_numpy(xs, ys, dr, vals, slopes, support, skip_zero):
    d = xs.shape[1]
    out = np.zeros(xs.shape[0])
    for zi in range(3**d):
        code, z = zi, np.empty(d)
        for c in range(d):
            z[c] = code % 3 - 1
            code //= 3
        if skip_zero and not z.any():
            continue
        px = np.where(z == 0, xs, z - xs)
        r = np.sqrt(np.sum((px - ys) ** 2, axis=1))
        out += _hermite_eval_numpy(r, dr, vals, slopes, support)
    return out


def mirror_sum_pairs(xs, ys, table: RadialTable, skip_zero=False, use_numba=None):
    """``sum_z g(P_z(x_a) - y_a)`` for paired rows of ``xs`` and ``ys``."""
    xs = np.ascontiguousarray(np.atleast_2d(xs), dtype=float)
    ys = np.ascontiguousarray(np.atleast_2d(ys), dtype=float)
    use_numba = HAVE_NUMBA if use_numba is None else use_numba
    fn = _mirror_pairs_numba if use_numba else _mirror_pairs_numpy
    return fn(xs, ys, *table.args(), bool(skip_zero))


@jit
def _mirror_apply_numba(xs, ys, phi, dr, vals, slopes, support):
    nx = xs.shape[0]
    ny = ys.shape[0]
    d = xs.shape[1]
    m = phi.shape[1]
    out = np.zeros((nx, m))
    nvals = vals.shape[0]
    px = np.empty(d)
    for a in range(nx):
        for zi in range(3**d):
            code = zi
            for c in range(d):
                z = code % 3 - 1
                code //= 3
                px[c] = xs[a, c] if z == 0 else z - xs[a, c]
            for b in range(ny):
                r2 = 0.0
                for c in range(d):
                    diff = px[c] - ys[b, c]
                    r2 += diff * diff
                if r2 >= support * support:
                    continue
                r = math.sqrt(r2)
                s = r / dr
                k = int(s)
                if k >= nvals - 1:
                    k = nvals - 2
                t = s - k
                t2 = t * t
                t3 = t2 * t
                g = ((2 * t3 - 3 * t2 + 1) * vals[k] + (t3 - 2 * t2 + t) * dr * slopes[k]
                     + (-2 * t3 + 3 * t2) * vals[k + 1] + (t3 - t2) * dr * slopes[k + 1])
                for j in range(m):
                    out[a, j] += g * phi[b, j]
    return out


def _mirror_apply_numpy(xs, ys, phi, dr, vals, slopes, support):
    out = np.zeros((xs.shape[0], phi.shape[1]))
    for a0 in range(0, xs.shape[0], 256):
        W = _mirror_matrix_numpy(xs[a0:a0 + 256], ys, dr, vals, slopes, support)
        out[a0:a0 + 256] = W @ phi
    return out


def mirror_sum_apply(xs, ys, phi, table: RadialTable, use_numba=None):
    """``out[a, j] = sum_b sum_z g(P_z(x_a) - y_b) phi[b, j]`` without forming the kernel matrix."""
    xs = np.ascontiguousarray(xs, dtype=float)
    ys = np.ascontiguousarray(ys, dtype=float)
    phi = np.ascontiguousarray(np.asarray(phi, dtype=float).reshape(ys.shape[0], -1))
    use_numba = HAVE_NUMBA if use_numba is None else use_numba
    fn = _mirror_apply_numba if use_numba else _mirror_apply_numpy
    return fn(xs, ys, phi, *table.args())


# -- boundary effect --------------------------------------------------------


@jit
def _herm(r, dr, vals, slopes, support):
    if r >= support:
        return 0.0
    n = vals.shape[0]
    s = r / dr
    k = int(s)
    if k >= n - 1:
        k = n - 2
    t = s - k
    t2 = t * t
    t3 = t2 * t
    return ((2 * t3 - 3 * t2 + 1) * vals[k] + (t3 - 2 * t2 + t) * dr * slopes[k]
            + (-2 * t3 + 3 * t2) * vals[k + 1] + (t3 - t2) * dr * slopes[k + 1])


@jit
def _boundary_terms_numba(xs, m, rho, lam, V, Vf, W):
    # V, Vf, W: (dr, vals, slopes, support) tuples unpacked by the caller
    delta = 1.0 / m
    npts = xs.shape[0]
    out = np.zeros((npts, 3))
    reach = int(math.ceil(rho / delta)) + 1
    for a in range(npts):
        x0, x1, x2 = xs[a, 0], xs[a, 1], xs[a, 2]
        # mirror choices per axis: 0 always, +-1 only near the matching face
        zs = np.zeros((3, 3), dtype=np.int64)
        nz = np.zeros(3, dtype=np.int64)
        for c in range(3):
            xc = xs[a, c]
            zs[c, 0] = 0
            k = 1
            if 1.0 - 2.0 * xc - rho < lam:
                zs[c, k] = 1
                k += 1
            if 1.0 + 2.0 * xc - rho < lam:
                zs[c, k] = -1
                k += 1
            nz[c] = k
        j0 = int(math.floor((x0 + 0.5) / delta))
        j1 = int(math.floor((x1 + 0.5) / delta))
        j2 = int(math.floor((x2 + 0.5) / delta))
        t_out = 0.0
        t_mir = 0.0
        t_in = 0.0
        for i0 in range(j0 - reach, j0 + reach + 1):
            y0 = -0.5 + (i0 + 0.5) * delta
            d0 = x0 - y0
            if abs(d0) >= rho:
                continue
            for i1 in range(j1 - reach, j1 + reach + 1):
                y1 = -0.5 + (i1 + 0.5) * delta
                d1 = x1 - y1
                r01 = d0 * d0 + d1 * d1
                if r01 >= rho * rho:
                    continue
                for i2 in range(j2 - reach, j2 + reach + 1):
                    y2 = -0.5 + (i2 + 0.5) * delta
                    d2 = x2 - y2
                    r2 = r01 + d2 * d2
                    if r2 >= rho * rho:
                        continue
                    r = math.sqrt(r2)
                    inside = (0 <= i0 < m) and (0 <= i1 < m) and (0 <= i2 < m)
                    if not inside:
                        t_out += _herm(r, Vf[0], Vf[1], Vf[2], Vf[3])
                        continue
                    v = _herm(r, V[0], V[1], V[2], V[3])
                    t_in += v
                    acc = 0.0
                    for a0 in range(nz[0]):
                        z0 = zs[0, a0]
                        p0 = x0 if z0 == 0 else z0 - x0
                        for a1 in range(nz[1]):
                            z1 = zs[1, a1]
                            p1 = x1 if z1 == 0 else z1 - x1
                            for a2 in range(nz[2]):
                                z2 = zs[2, a2]
                                if z0 == 0 and z1 == 0 and z2 == 0:
                                    continue
                                p2 = x2 if z2 == 0 else z2 - x2
                                rr = math.sqrt((p0 - y0) ** 2 + (p1 - y1) ** 2 + (p2 - y2) ** 2)
                                acc += _herm(rr, W[0], W[1], W[2], W[3])
                    t_mir += v * acc
        vol = delta**3
        out[a, 0] = t_out * vol
        out[a, 1] = t_mir * vol
        out[a, 2] = t_in * vol
    return out


def _boundary_terms_numpy(xs, m, rho, lam, V, Vf, W):
    delta = 1.0 / m
    reach = int(math.ceil(rho / delta)) + 1
    off = np.arange(-reach, reach + 1)
    out = np.zeros((xs.shape[0], 3))
    for a, x in enumerate(xs):
        j = np.floor((x + 0.5) / delta).astype(np.int64)
        idx = np.stack(np.meshgrid(*[j[c] + off for c in range(3)], indexing="ij"), -1).reshape(-1, 3)
        y = -0.5 + (idx + 0.5) * delta
        r = np.sqrt(np.sum((x - y) ** 2, axis=1))
        keep = r < rho
        idx, y, r = idx[keep], y[keep], r[keep]
        inside = np.all((idx >= 0) & (idx < m), axis=1)
        t_out = _hermite_eval_numpy(r[~inside], *Vf).sum()
        v = _hermite_eval_numpy(r[inside], *V)
        yi = y[inside]
        choices = []
        for c in range(3):
            zc = [0]
            if 1.0 - 2.0 * x[c] - rho < lam:
                zc.append(1)
            if 1.0 + 2.0 * x[c] - rho < lam:
                zc.append(-1)
            choices.append(zc)
        acc = np.zeros(yi.shape[0])
        for z in np.stack(np.meshgrid(*choices, indexing="ij"), -1).reshape(-1, 3):
            if not z.any():
                continue
            px = np.where(z == 0, x, z - x)
            acc += _hermite_eval_numpy(np.sqrt(np.sum((px - yi) ** 2, axis=1)), *W)
        out[a] = (t_out * delta**3, float(v @ acc) * delta**3, v.sum() * delta**3)
    return out


def boundary_terms(xs, m, rho, lam, V: RadialTable, Vf: RadialTable, W: RadialTable, use_numba=None):
    """Per point ``x`` the three y-integrals of the boundary-effect function.

    Columns: ``int_{Lambda^c} Vf(x - y)``, ``int_Lambda V(x - y) sum_{z != 0} W(P_z x - y)``
    and ``int_Lambda V(x - y)``, each by the midpoint rule on the lattice of
    spacing ``1/m`` aligned with the faces of ``[-1/2, 1/2]^3``.
    """
    xs = np.ascontiguousarray(xs, dtype=float)
    use_numba = HAVE_NUMBA if use_numba is None else use_numba
    fn = _boundary_terms_numba if use_numba else _boundary_terms_numpy
    return fn(xs, int(m), float(rho), float(lam), V.args(), Vf.args(), W.args())
