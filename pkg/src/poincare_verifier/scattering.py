"""Zero-energy scattering solutions, scattering lengths, cutoff pairs and radial Fourier transforms."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import integrate, special

from .kernels import RadialTable

KINDS = ("square", "bump", "tabulated")


class ScatteringError(ValueError):
    pass


@dataclass(frozen=True)
class PotentialSpec:
    """Radial, nonnegative potential supported in ``{r < R}``.

    ``square``: ``amplitude`` on ``r < R``. ``bump``: ``amplitude *
    exp(1 - 1/(1 - (r/R)^2))``. ``tabulated``: linear interpolation of
    ``samples = (r, V)``, zero beyond ``R``.
    """

    kind: str
    amplitude: float
    R: float
    samples: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ScatteringError(f"unknown potential kind {self.kind!r}")
        if not 0 < self.R:
            raise ScatteringError("range R must be positive")
        if self.amplitude < 0:
            raise ScatteringError("potential must be nonnegative")
        if self.kind == "tabulated":
            if self.samples is None:
                raise ScatteringError("tabulated potential needs samples")
            r, v = (np.asarray(a, dtype=float) for a in self.samples)
            if r.ndim != 1 or r.shape != v.shape or r.size < 2 or np.any(np.diff(r) <= 0):
                raise ScatteringError("samples must be increasing radii with matching values")
            if np.any(v < 0):
                raise ScatteringError("potential must be nonnegative")
            if r[-1] > self.R + 1e-15 and np.any(v[r > self.R] != 0):
                raise ScatteringError("tabulated samples must vanish beyond R")
            object.__setattr__(self, "samples", (r, v))

    @classmethod
    def square(cls, amplitude: float, R: float) -> "PotentialSpec":
        return cls("square", amplitude, R)

    @classmethod
    def bump(cls, amplitude: float, R: float) -> "PotentialSpec":
        return cls("bump", amplitude, R)

    @classmethod
    def tabulated(cls, r, v, R: Optional[float] = None) -> "PotentialSpec":
        r = np.asarray(r, dtype=float)
        return cls("tabulated", 1.0, float(r[-1] if R is None else R), (r, np.asarray(v, dtype=float)))

    def __call__(self, r, closed: bool = False) -> np.ndarray:
        """``V(r)``. With ``closed`` the support is taken as ``r <= R`` (left limit at ``R``)."""
        r = np.abs(np.asarray(r, dtype=float))
        inside = r <= self.R if closed else r < self.R
        if self.kind == "square":
            return np.where(inside, self.amplitude, 0.0)
        if self.kind == "bump":
            s2 = np.where(r < self.R, (r / self.R) ** 2, 0.0)
            with np.errstate(divide="ignore", over="ignore"):
                val = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - s2))
            return np.where(r < self.R, val, 0.0)
        rs, vs = self.samples
        return np.where(inside, self.amplitude * np.interp(r, rs, vs, right=0.0), 0.0)

    def scaled(self, ell: float) -> "PotentialSpec":
        """``V_ell(x) = ell^2 V(ell x)``."""
        if self.kind == "tabulated":
            rs, vs = self.samples
            return PotentialSpec("tabulated", self.amplitude, self.R / ell, (rs / ell, vs * ell**2))
        return PotentialSpec(self.kind, self.amplitude * ell**2, self.R / ell)

    def is_nonincreasing(self, n: int = 4097) -> bool:
        v = self(np.linspace(0.0, self.R, n), closed=True)
        return bool(np.all(np.diff(v) <= 1e-15 * max(1.0, float(v.max()))))

    def integral(self) -> float:
        """``int_{R^3} V`` by quadrature."""
        return 4 * math.pi * integrate.quad(lambda r: float(self(r, closed=True)) * r * r, 0.0, self.R,
                                            limit=200, epsabs=0.0, epsrel=1e-12)[0]

    def to_config(self) -> dict:
        out = {"kind": self.kind, "amplitude": self.amplitude, "R": self.R}
        if self.kind == "tabulated":
            out["samples"] = [list(map(float, a)) for a in self.samples]
        return out

    @classmethod
    def from_config(cls, cfg: dict) -> "PotentialSpec":
        unknown = set(cfg) - {"kind", "amplitude", "R", "samples"}
        if unknown:
            raise ScatteringError(f"unknown potential keys {sorted(unknown)}")
        samples = cfg.get("samples")
        if samples is not None:
            samples = (samples[0], samples[1])
        return cls(cfg["kind"], float(cfg.get("amplitude", 1.0)), float(cfg["R"]), samples)


# -- ODE solve ---------------------------------------------------------------


def _rk4(V: PotentialSpec, R: float, steps: int):
    """``u'' = V u / 2`` on ``[0, R]`` from ``u(0) = 0, u'(0) = 1``; returns ``r, u, u'``."""
    h = R / steps
    r = np.linspace(0.0, R, steps + 1)
    half = V(r[:-1] + 0.5 * h, closed=True) * 0.5
    full = V(r, closed=True) * 0.5
    u = np.empty(steps + 1)
    du = np.empty(steps + 1)
    u[0], du[0] = 0.0, 1.0
    for k in range(steps):
        y, z = u[k], du[k]
        k1y, k1z = z, full[k] * y
        k2y, k2z = z + 0.5 * h * k1z, half[k] * (y + 0.5 * h * k1y)
        k3y, k3z = z + 0.5 * h * k2z, half[k] * (y + 0.5 * h * k2y)
        k4y, k4z = z + h * k3z, full[k + 1] * (y + h * k3y)
        u[k + 1] = y + h * (k1y + 2 * k2y + 2 * k3y + k4y) / 6
        du[k + 1] = z + h * (k1z + 2 * k2z + 2 * k3z + k4z) / 6
    return r, u, du


@dataclass
class RadialScatteringSolution:
    """Samples of ``omega`` on ``(0, r_max]`` together with the interior ``u = r(1 - omega)``."""

    r: np.ndarray
    omega_samples: np.ndarray
    a0: float
    potential: PotentialSpec
    c: float
    r_in: np.ndarray = field(repr=False)
    u_in: np.ndarray = field(repr=False)
    du_in: np.ndarray = field(repr=False)

    @property
    def R(self) -> float:
        return self.potential.R

    def u(self, r) -> np.ndarray:
        """``u(r)`` by cubic Hermite interpolation of the RK4 samples (linear exterior)."""
        r = np.abs(np.asarray(r, dtype=float))
        shape = r.shape
        r = r.ravel()
        out = self.c * (r - self.a0)
        inner = r < self.R
        if np.any(inner):
            ri = r[inner]
            dr = self.r_in[1] - self.r_in[0]
            k = np.minimum((ri / dr).astype(int), self.r_in.size - 2)
            t = ri / dr - k
            t2, t3 = t * t, t * t * t
            out[inner] = ((2 * t3 - 3 * t2 + 1) * self.u_in[k] + (t3 - 2 * t2 + t) * dr * self.du_in[k]
                          + (-2 * t3 + 3 * t2) * self.u_in[k + 1] + (t3 - t2) * dr * self.du_in[k + 1])
        return out.reshape(shape)

    def omega(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        tiny = r < 1e-12
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 1.0 - self.u(r) / (self.c * r)
        out = np.where(r >= self.R, self.a0 / np.where(r > 0, r, 1.0), out)
        return np.where(tiny, 1.0 - 1.0 / self.c, out)

    def integral_route(self) -> float:
        """``int V (1 - omega) = 4 pi int_0^R V u r / c dr`` by Simpson's rule."""
        v = self.potential(self.r_in, closed=True)
        return 4 * math.pi * float(integrate.simpson(v * self.u_in * self.r_in, x=self.r_in)) / self.c

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w") as fh:
            fh.write("r,omega\n")
            for a, b in zip(self.r, self.omega_samples):
                fh.write(f"{a:.17g},{b:.17g}\n")


def solve_scattering(V: PotentialSpec, r_max: Optional[float] = None, n_r: int = 4096) -> RadialScatteringSolution:
    """Integrate the zero-energy equation for ``u = r(1 - omega)`` and match ``u = c(r - a0)`` at ``R``.

    The radial grid has a node exactly at ``R``; ``n_r`` counts the nodes in ``(0, r_max]``.
    """
    R = V.R
    r_max = 2 * R if r_max is None else float(r_max)
    if r_max < 2 * R:
        raise ScatteringError("r_max must be at least 2R")
    if n_r < 256:
        raise ScatteringError("n_r must be at least 256")
    steps = max(64, int(round(n_r * R / r_max)))
    r_in, u_in, du_in = _rk4(V, R, steps)
    if np.any(u_in[1:] <= 0):
        raise ScatteringError("u lost positivity inside the well: potential too strong for this solver")
    c = float(du_in[-1])
    a0 = float(R - u_in[-1] / c)
    if not (c > 0 and 0 <= a0 <= R + 1e-15):
        raise ScatteringError(f"unphysical matching (c={c}, a0={a0})")
    a0 = max(a0, 0.0)
    dr = R / steps
    n_out = max(1, n_r - steps)
    r_out = R + (r_max - R) * np.arange(1, n_out + 1) / n_out
    r = np.concatenate([r_in[1:], r_out])
    omega_in = 1.0 - u_in[1:] / (c * r_in[1:])
    omega = np.concatenate([omega_in, a0 / r_out])
    return RadialScatteringSolution(r, omega, a0, V, c, r_in, u_in, du_in)


def scattering_length(sol: RadialScatteringSolution, rtol: float = 1e-6) -> float:
    """``a0`` from the asymptotic fit, cross-checked against ``int V(1 - omega) / (8 pi)``."""
    if sol.a0 == 0.0:
        return 0.0
    other = sol.integral_route() / (8 * math.pi)
    if abs(other - sol.a0) > rtol * sol.a0:
        raise ScatteringError(f"scattering length routes disagree: {sol.a0!r} vs {other!r}")
    return sol.a0


def square_well_a0(amplitude: float, R: float) -> float:
    if amplitude == 0:
        return 0.0
    k = math.sqrt(amplitude / 2)
    return R - math.tanh(k * R) / k


# -- cutoff profile -----------------------------------------------------------


def _chi_parts(t):
    """``chi``, ``chi'``, ``chi''`` of the C^inf step: 1 on [0, 1/2], 0 on [1, inf)."""
    t = np.abs(np.asarray(t, dtype=float))
    chi = np.where(t <= 0.5, 1.0, 0.0)
    d1 = np.zeros_like(t)
    d2 = np.zeros_like(t)
    m = (t > 0.5) & (t < 1.0)
    if np.any(m):
        s = 2 * t[m] - 1
        phi = 1.0 / (1.0 - s) - 1.0 / s
        dphi = 1.0 / s**2 + 1.0 / (1.0 - s) ** 2
        ddphi = 2.0 / (1.0 - s) ** 3 - 2.0 / s**3
        q = special.expit(-phi)
        qq = q * (1 - q)
        dq = -qq * dphi
        ddq = -((1 - 2 * q) * dq * dphi + qq * ddphi)
        chi[m], d1[m], d2[m] = q, 2 * dq, 4 * ddq
    return chi, d1, d2


def chi(t):
    return _chi_parts(t)[0]


def chi_dd(t):
    return _chi_parts(t)[2]


@dataclass
class CutoffScatteringPair:
    """``omega_{l,lam}(x) = omega(l x) chi(x/lam)`` and ``eps_{l,lam}``."""

    sol: RadialScatteringSolution
    ell: float
    lam: float

    def __post_init__(self):
        if not (2 * self.sol.R / self.ell < self.lam <= 1):
            raise ScatteringError(f"need 2R/ell < lambda <= 1 (R={self.sol.R}, ell={self.ell}, lambda={self.lam})")

    @property
    def a0(self) -> float:
        return self.sol.a0

    @property
    def support(self) -> float:
        return self.lam

    def potential(self) -> PotentialSpec:
        return self.sol.potential.scaled(self.ell)

    def V_ell(self, r) -> np.ndarray:
        return self.ell**2 * self.sol.potential(self.ell * np.abs(np.asarray(r, dtype=float)))

    def omega_ell(self, r) -> np.ndarray:
        return self.sol.omega(self.ell * np.abs(np.asarray(r, dtype=float)))

    def f_ell(self, r) -> np.ndarray:
        return 1.0 - self.omega_ell(r)

    def Vf(self, r) -> np.ndarray:
        """``V_ell (1 - omega_ell)``."""
        return self.V_ell(r) * self.f_ell(r)

    def omega(self, x) -> np.ndarray:
        """Evaluate at radii ``|x|``."""
        r = np.abs(np.asarray(x, dtype=float))
        return self.omega_ell(r) * chi(r / self.lam)

    def eps(self, x) -> np.ndarray:
        r = np.abs(np.asarray(x, dtype=float))
        t = r / self.lam
        with np.errstate(divide="ignore", invalid="ignore"):
            val = 2 * self.a0 / self.ell * self.lam**-3 * chi_dd(t) / t
        return np.where((t > 0.5) & (t < 1.0), val, 0.0)

    def table(self, name: str, n: int = 16385) -> RadialTable:
        """Radial Hermite table of ``omega``, ``eps``, ``V``, ``Vf`` or ``f`` for the compiled kernels."""
        fns = {"omega": (self.omega, self.lam), "eps": (self.eps, self.lam), "V": (self.V_ell, self.sol.R / self.ell),
               "Vf": (self.Vf, self.sol.R / self.ell)}
        fn, supp = fns[name]
        return RadialTable.from_function(fn, supp, n)


def cutoff_pair(sol: RadialScatteringSolution, ell: float, lam: float) -> CutoffScatteringPair:
    return CutoffScatteringPair(sol, float(ell), float(lam))


def radial_laplacian_fd(fn: Callable, r: np.ndarray, h: float) -> np.ndarray:
    """``(r g)'' / r`` by the centred second difference with step ``h``."""
    r = np.asarray(r, dtype=float)
    rg = lambda s: s * fn(s)
    return (rg(r + h) - 2 * rg(r) + rg(r - h)) / (h * h * r)


def cutoff_residual(pair: CutoffScatteringPair, r: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """``-Delta omega_{l,lam} - V_l (1 - omega_l)/2 + eps/2`` at radii ``r``."""
    r = np.asarray(r, dtype=float)
    return -radial_laplacian_fd(pair.omega, r, h) - 0.5 * pair.Vf(r) + 0.5 * pair.eps(r)


# -- Fourier transforms -----------------------------------------------------------


def _segments(support: float, breakpoints: Sequence[float]):
    pts = sorted({0.0, float(support), *[float(b) for b in breakpoints if 0 < b < support]})
    return list(zip(pts[:-1], pts[1:]))


def fourier_mode(g: Callable, p, support: float, d: int = 3, breakpoints: Sequence[float] = ()) -> float:
    """``g_hat(p) = int_{R^d} g(|x|) e^{-i x.p} dx`` for a radial ``g`` supported in ``[0, support]``.

    ``p`` is a wave vector or its length. Adaptive quadrature over the segments
    between ``breakpoints``; oscillatory weights for ``d`` in ``{1, 3}``.
    """
    p = float(np.linalg.norm(np.atleast_1d(np.asarray(p, dtype=float))))
    g1 = lambda r: float(g(np.asarray(r)))
    kw = dict(limit=400, epsabs=1e-15, epsrel=1e-11)
    total = 0.0
    for a, b in _segments(support, breakpoints):
        if d == 3:
            if p == 0:
                total += 4 * math.pi * integrate.quad(lambda r: g1(r) * r * r, a, b, **kw)[0]
            else:
                total += 4 * math.pi / p * integrate.quad(lambda r: g1(r) * r, a, b, weight="sin", wvar=p, **kw)[0]
        elif d == 2:
            total += 2 * math.pi * integrate.quad(lambda r: g1(r) * special.j0(p * r) * r, a, b, **kw)[0]
        elif d == 1:
            if p == 0:
                total += 2 * integrate.quad(g1, a, b, **kw)[0]
            else:
                total += 2 * integrate.quad(g1, a, b, weight="cos", wvar=p, **kw)[0]
        else:
            raise ValueError("d must be 1, 2 or 3")
    return total


def gauss_legendre_panels(support: float, breakpoints: Sequence[float] = (), p_max: float = 0.0,
                          order: int = 24, min_panels: int = 4):
    """Nodes and weights on ``[0, support]`` with panel edges at ``breakpoints``, resolving ``p_max``."""
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in _segments(support, breakpoints):
        wavelengths = (b - a) * p_max / (2 * math.pi)
        k = max(min_panels, int(math.ceil(wavelengths)) * 2)
        edges = np.linspace(a, b, k + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            nodes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
            weights.append(0.5 * (hi - lo) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def fourier_batch(g: Callable, ps, support: float, d: int = 3, breakpoints: Sequence[float] = (),
                  order: int = 24) -> np.ndarray:
    """Vectorised radial transform at many ``|p|`` by panelled Gauss-Legendre quadrature."""
    ps = np.asarray(ps, dtype=float)
    r, w = gauss_legendre_panels(support, breakpoints, float(ps.max()) if ps.size else 0.0, order)
    gw = g(r) * w
    out = np.empty(ps.shape)
    flat = ps.ravel()
    res = np.empty(flat.size)
    for i0 in range(0, flat.size, 512):
        pp = flat[i0:i0 + 512, None]
        pr = pp * r[None, :]
        if d == 3:
            with np.errstate(invalid="ignore", divide="ignore"):
                kern = np.where(pp > 0, np.sin(pr) / np.where(pp > 0, pp, 1.0) * r, r * r)
            res[i0:i0 + 512] = 4 * math.pi * kern @ gw
        elif d == 2:
            res[i0:i0 + 512] = 2 * math.pi * (special.j0(pr) * r) @ gw
        else:
            res[i0:i0 + 512] = 2 * np.cos(pr) @ gw
    out[...] = res.reshape(ps.shape)
    return out
