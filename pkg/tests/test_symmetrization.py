import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from poincare_verifier.scattering import PotentialSpec, cutoff_pair, solve_scattering
from poincare_verifier.symmetrization import (
    boundary_effect,
    identity_entry,
    identity_matrix,
    kernel_split_residual,
    lattice_points,
    mirror_point,
    mirror_set,
    pair_kernel,
    random_mode_pairs,
    spot_check,
    symmetrized_kernel,
    verify_diagonal_identity,
    zero_mode_gap,
)

BUMP = PotentialSpec.bump(4.0, 0.5)


@pytest.fixture(scope="module")
def pair():
    return cutoff_pair(solve_scattering(BUMP, n_r=8192), 16.0, 0.5)


def tent(r):
    r = np.asarray(r, dtype=float)
    return np.clip(1 - r / 0.2, 0, None)


def test_mirror_point_examples():
    assert np.array_equal(mirror_point((0, 0), (0.1, -0.3)), [0.1, -0.3])
    assert mirror_point((1,), (0.3,))[0] == pytest.approx(0.7)
    assert mirror_point((-1,), (0.3,))[0] == pytest.approx(-1.3)
    assert len(mirror_set(3)) == 27


def test_mirror_never_closer():
    rng = np.random.default_rng(3)
    x = rng.uniform(-0.5, 0.5, (10000, 3))
    y = rng.uniform(-0.5, 0.5, (10000, 3))
    base = np.linalg.norm(x - y, axis=1)
    for z in mirror_set(3):
        d = np.linalg.norm(mirror_point(z, x) - y, axis=1)
        assert np.all(d >= base - 1e-14)


def test_support_rejected():
    with pytest.raises(ValueError):
        symmetrized_kernel(tent, 1.0, 3)


def test_interior_identity():
    k = symmetrized_kernel(tent, 0.2, 3, (0.2,))
    rng = np.random.default_rng(0)
    x = rng.uniform(-0.25, 0.25, (200, 3))
    y = x + rng.uniform(-0.1, 0.1, (200, 3))
    assert np.allclose(k.W_tilde(x, y), k.free(x, y), rtol=0, atol=1e-15)


def test_face_doubling():
    k = symmetrized_kernel(tent, 0.2, 3, (0.2,))
    x = np.array([[0.5, 0.0, 0.0]])
    y = np.array([[0.42, 0.03, 0.0]])
    assert k.W_tilde(x, y)[0] == pytest.approx(2 * k.free(x, y)[0], rel=1e-12)
    corner = np.array([[0.5, 0.5, 0.5]])
    yc = np.array([[0.45, 0.47, 0.46]])
    assert k.W_tilde(corner, yc)[0] == pytest.approx(8 * k.free(corner, yc)[0], rel=1e-12)


def test_zero_kernel():
    k = symmetrized_kernel(lambda r: np.zeros_like(np.asarray(r, dtype=float)), 0.2, 2)
    x = lattice_points(8, 2)
    assert np.all(k.W_tilde(x, x[::-1]) == 0) and k.ghat0 == 0


@given(st.integers(0, 2**31))
def test_symmetric_in_arguments(seed):
    k = symmetrized_kernel(tent, 0.2, 3, (0.2,))
    rng = np.random.default_rng(seed)
    x = rng.uniform(-0.5, 0.5, (50, 3))
    y = np.clip(x + rng.uniform(-0.2, 0.2, (50, 3)), -0.5, 0.5)
    a, b = k.W_tilde(x, y), k.W_tilde(y, x)
    assert np.max(np.abs(a - b)) <= 1e-12


def test_zero_mode_is_integral():
    k = symmetrized_kernel(tent, 0.2, 2, (0.2,))
    assert k.ghat0 == pytest.approx(2 * math.pi * 0.2**2 / 6, rel=1e-12)
    assert identity_entry(k, (0, 0), (0, 0), 64) == pytest.approx(k.ghat0, rel=1e-3)


def test_identity_d2_routes_agree(pair):
    k = pair_kernel(pair, 2)
    a = identity_matrix(k, 2, 32, "apply")
    b = identity_matrix(k, 2, 32, "fft")
    assert np.max(np.abs(a.matrix - b.matrix)) <= 1e-14
    with pytest.raises(ValueError):
        identity_matrix(k, 1, 8, "nope")


def test_identity_d2_full(pair):
    res = identity_matrix(pair_kernel(pair, 2), 3, 64, "fft")
    assert res.offdiag_max <= 1e-4
    assert res.diag_residual <= 1e-4


def test_identity_d3(pair):
    k = pair_kernel(pair, 3)
    assert max(spot_check(k, random_mode_pairs(6, 3, 3, 0), 64)) <= 1e-4
    # first nonzero mode against the radial Fourier oracle
    assert verify_diagonal_identity(k, (1, 0, 0), (1, 0, 0), 64) <= 1e-3 * abs(k.ghat((1, 0, 0))) + 1e-9


def test_random_pairs_cover_both_cases():
    pairs = random_mode_pairs(10, 3, 3, seed=5)
    assert pairs == random_mode_pairs(10, 3, 3, seed=5)
    assert all(p == q for p, q in pairs[::2])


def test_zero_mode_gap(pair):
    k = pair_kernel(pair, 2)
    rng = np.random.default_rng(1)
    idx = rng.integers(0, 64 * 64, (200, 2))
    assert zero_mode_gap(k, 64, idx) <= 1e-6


def test_boundary_zero_potential():
    b = boundary_effect(4.0, 8.0, 0.5, PotentialSpec.square(0.0, 0.5))
    assert b.l1 == 0 and b.integral == 0 and b.a0 == 0


def test_boundary_errors():
    with pytest.raises(ValueError):
        boundary_effect(4.0, 8.0, 0.1, BUMP)
    with pytest.raises(ValueError):
        boundary_effect(4.0, 8.0, 0.5, BUMP, y_per_range=1)


def test_boundary_consistency():
    b = boundary_effect(4.0, 8.0, 0.5, BUMP, (1.0, 2.0, math.inf))
    assert b.l1 > 0 and b.consistency_gap >= 0
    assert b.norms[1.0] == pytest.approx(b.l1, rel=1e-12)
    assert b.norms[2.0] <= b.norms[math.inf]


def test_kernel_split_zero_potential():
    r = kernel_split_residual(8.0, 16.0, 0.5, PotentialSpec.square(0.0, 0.5), samples=5)
    assert r.residual == 0 and r.relative == 0


def test_kernel_split_far_from_diagonal():
    # K~ vanishes away from the support of V_l; what is left is mode truncation,
    # which decays once the cutoff resolves the width R/l of V_l
    xs = np.array([[0.1, 0.0, 0.0], [-0.2, 0.1, 0.05]])
    ys = xs + np.array([[0.1, 0.0, 0.0], [0.0, -0.12, 0.0]])
    res = [kernel_split_residual(8.0, 16.0, 0.5, BUMP, xs, ys, cutoff=c) for c in (24, 48, 96)]
    assert np.all(res[0].terms["K"] == 0)
    assert res[0].residual > res[1].residual > res[2].residual


@pytest.mark.slow
def test_kernel_split_converges():
    rel = [kernel_split_residual(8.0, 16.0, 0.5, BUMP, cutoff=c, samples=100).relative for c in (24, 48, 96)]
    assert rel[0] > rel[1] > rel[2]
    assert rel[2] < 0.1


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="cutoff 48 leaves about 20% relative residual; see decisions ledger")
def test_kernel_split_cutoff48_target():
    r = kernel_split_residual(8.0, 16.0, 0.5, BUMP, cutoff=48, samples=100)
    assert r.relative < 1e-2
