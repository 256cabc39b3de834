"""Time the compiled kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 3]

With VERIFIER_NO_NUMBA=1 only the numpy column is filled.
"""
import argparse
import time

import numpy as np

from poincare_verifier import HAVE_NUMBA
from poincare_verifier.graph import GridGraph
from poincare_verifier.kernels import (
    RadialTable,
    boundary_terms,
    cheeger_exhaustive,
    mirror_sum_apply,
    mirror_sum_pairs,
)
from poincare_verifier.symmetrization import lattice_points


def bump(r):
    r = np.asarray(r, dtype=float)
    return np.where(r < 0.3, (1 - (r / 0.3) ** 2) ** 2, 0.0)


def best_of(fn, repeat):
    fn()  # warm-up; also triggers compilation
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def cases():
    tab = RadialTable.from_function(bump, 0.3, 4097)
    g = GridGraph(18, 1)
    edges = g.edges()
    pts = lattice_points(40, 2)
    phi = np.cos(np.pi * (pts[:, :1] + 0.5)) * np.arange(1, 5)
    rng = np.random.default_rng(0)
    xs = rng.uniform(-0.5, 0.5, (20000, 3))
    ys = np.clip(xs + rng.normal(scale=0.1, size=xs.shape), -0.5, 0.5)
    vtab = RadialTable.from_function(bump, 0.05, 4097)
    wtab = RadialTable.from_function(bump, 0.3, 4097)
    X = rng.uniform(0.3, 0.5, (64, 3))
    return {
        "cheeger_exhaustive (M=18)": lambda nb: cheeger_exhaustive(g.size, edges, use_numba=nb)[0],
        "mirror_sum_apply (40^2 lattice)": lambda nb: mirror_sum_apply(pts, pts, phi, tab, use_numba=nb),
        "mirror_sum_pairs (2e4 pairs)": lambda nb: mirror_sum_pairs(xs, ys, tab, use_numba=nb),
        "boundary_terms (64 points)": lambda nb: boundary_terms(X, 200, 0.05, 0.3, vtab, vtab, wtab, use_numba=nb),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'kernel':34s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}  agree")
    for name, fn in cases().items():
        t_np, a = best_of(lambda: fn(False), args.repeat)
        if HAVE_NUMBA:
            t_nb, b = best_of(lambda: fn(True), args.repeat)
            agree = np.allclose(a, b, rtol=1e-12, atol=1e-14)
            print(f"{name:34s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f}  {agree}")
        else:
            print(f"{name:34s} {t_np:10.4f} {'-':>10s} {'-':>8s}  -")


if __name__ == "__main__":
    main()
