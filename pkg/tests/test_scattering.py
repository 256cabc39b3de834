import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from poincare_verifier.scattering import (
    PotentialSpec,
    ScatteringError,
    chi,
    chi_dd,
    cutoff_pair,
    cutoff_residual,
    fourier_batch,
    fourier_mode,
    scattering_length,
    solve_scattering,
    square_well_a0,
)

SQUARE = PotentialSpec.square(2.0, 0.5)
BUMP = PotentialSpec.bump(4.0, 0.5)


def test_zero_potential():
    sol = solve_scattering(PotentialSpec.square(0.0, 0.5))
    assert sol.a0 == 0.0 and scattering_length(sol) == 0.0
    assert np.all(sol.omega_samples == 0.0)


def test_square_well_closed_form():
    a0 = scattering_length(solve_scattering(SQUARE))
    assert a0 == pytest.approx(0.5 - math.tanh(0.5), rel=1e-9)
    assert round(a0, 6) == 0.037883


@pytest.mark.parametrize("amp,R", [(0.5, 1.0), (2.0, 0.5), (8.0, 0.25), (3.0, 1.5)])
def test_square_well_family(amp, R):
    sol = solve_scattering(PotentialSpec.square(amp, R), n_r=4096)
    assert sol.a0 == pytest.approx(square_well_a0(amp, R), rel=1e-8)


def test_integral_identity_all_shipped():
    for V in (SQUARE, BUMP, PotentialSpec.tabulated([0, 0.25, 0.5], [3.0, 1.0, 0.0])):
        sol = solve_scattering(V, n_r=8192)
        assert sol.integral_route() == pytest.approx(8 * math.pi * sol.a0, rel=1e-6)


def test_born_limit():
    a0 = solve_scattering(PotentialSpec.square(1e-3, 0.5)).a0
    assert a0 == pytest.approx(1e-3 * 0.5**3 / 6, rel=1e-2)


def test_omega_bounds_and_exterior():
    for V in (SQUARE, BUMP):
        sol = solve_scattering(V)
        assert np.all(sol.omega_samples >= 0) and np.all(sol.omega_samples <= 1)
        out = sol.r >= V.R
        assert np.abs(sol.omega_samples[out] - sol.a0 / sol.r[out]).max() <= 1e-8


@pytest.mark.parametrize("ell", [4.0, 16.0])
def test_scaled_potential_length(ell):
    a0 = solve_scattering(BUMP, n_r=8192).a0
    a_l = solve_scattering(BUMP.scaled(ell), n_r=8192).a0
    assert a_l == pytest.approx(a0 / ell, rel=1e-6)


def test_potential_validation():
    with pytest.raises(ScatteringError):
        PotentialSpec("cone", 1.0, 1.0)
    with pytest.raises(ScatteringError):
        PotentialSpec.square(-1.0, 1.0)
    with pytest.raises(ScatteringError):
        PotentialSpec.tabulated([0, 1], [1, -1])
    with pytest.raises(ScatteringError):
        solve_scattering(SQUARE, r_max=0.6)


def test_config_round_trip():
    for V in (SQUARE, PotentialSpec.tabulated([0, 0.5, 1.0], [2, 1, 0])):
        W = PotentialSpec.from_config(V.to_config())
        r = np.linspace(0, 1.2, 50)
        assert np.array_equal(W(r), V(r))
    with pytest.raises(ScatteringError):
        PotentialSpec.from_config({"kind": "square", "R": 1, "extra": 2})


def test_monotone_flags():
    assert SQUARE.is_nonincreasing() and BUMP.is_nonincreasing()
    assert not PotentialSpec.tabulated([0, 0.5, 1.0], [1, 2, 0]).is_nonincreasing()


def test_chi_profile():
    t = np.linspace(0, 1.2, 241)
    c = chi(t)
    assert np.all(c[t <= 0.5] == 1) and np.all(c[t >= 1] == 0)
    assert np.all(np.diff(c) <= 1e-15)
    # second derivative agrees with a finite difference in the transition shell
    s = np.linspace(0.55, 0.95, 9)
    h = 1e-4
    fd = (chi(s + h) - 2 * chi(s) + chi(s - h)) / h**2
    assert np.allclose(fd, chi_dd(s), atol=1e-5 * np.abs(chi_dd(s)).max())


def test_cutoff_pair_supports():
    pair = cutoff_pair(solve_scattering(BUMP), 16.0, 0.5)
    r = np.linspace(0, 0.25, 30)
    assert np.array_equal(pair.omega(r), pair.omega_ell(r))
    assert np.all(pair.omega(np.linspace(0.5, 1.0, 20)) == 0)
    with pytest.raises(ScatteringError):
        cutoff_pair(solve_scattering(BUMP), 2.0, 0.4)


def test_cutoff_residual_second_order():
    pair = cutoff_pair(solve_scattering(BUMP, n_r=8192), 16.0, 0.5)
    r = np.linspace(0.05, 0.45, 41)
    e = [np.abs(cutoff_residual(pair, r, h)).max() for h in (1e-3, 5e-4, 2.5e-4)]
    assert e[0] / e[1] == pytest.approx(4, rel=0.1)
    assert e[1] / e[2] == pytest.approx(4, rel=0.1)


def test_pointwise_bound_stable_in_ell():
    sol = solve_scattering(BUMP)
    sups = []
    for ell in (8.0, 16.0, 32.0):
        pair = cutoff_pair(sol, ell, 0.5)
        r = np.linspace(1e-4, 0.5, 4001)
        sups.append(np.max(pair.omega(r) * (ell * r + 1)))
    assert max(sups) / min(sups) < 1.5


def ball_ft(p, a, d):
    if d == 3:
        return 4 * math.pi * (math.sin(p * a) - p * a * math.cos(p * a)) / p**3
    if d == 2:
        return 2 * math.pi * a * special.j1(p * a) / p
    return 2 * math.sin(p * a) / p


@pytest.mark.parametrize("d", [1, 2, 3])
def test_fourier_of_ball(d):
    ball = lambda r: np.where(np.asarray(r) <= 0.3, 1.0, 0.0)
    vol = {1: 0.6, 2: math.pi * 0.09, 3: 4 * math.pi * 0.027 / 3}[d]
    assert fourier_mode(ball, 0.0, 0.3, d) == pytest.approx(vol, rel=1e-10)
    for p in (1.0, math.pi, 7.5, 40.0):
        assert fourier_mode(ball, p, 0.3, d) == pytest.approx(ball_ft(p, 0.3, d), rel=1e-8, abs=1e-12)
    ps = np.array([0.5, 3.0, 40.0])
    assert np.allclose(fourier_batch(ball, ps, 0.3, d, order=32), [ball_ft(p, 0.3, d) for p in ps], rtol=1e-10)


def test_vf_transform_at_zero():
    sol = solve_scattering(BUMP, n_r=8192)
    pair = cutoff_pair(sol, 16.0, 0.5)
    got = fourier_mode(pair.Vf, 0.0, 0.5 / 16, 3)
    assert got == pytest.approx(8 * math.pi * sol.a0 / 16, rel=1e-6)


def test_omega_hat_zero_vs_3d_midpoint():
    pair = cutoff_pair(solve_scattering(BUMP), 16.0, 0.5)
    rad = fourier_mode(pair.omega, 0.0, 0.5, 3, (0.5 / 16, 0.25))
    n = 160
    t = (np.arange(n) + 0.5) / n - 0.5
    X, Y, Z = np.meshgrid(t, t, t, indexing="ij", sparse=True)
    direct = pair.omega(np.sqrt(X**2 + Y**2 + Z**2)).sum() / n**3
    assert direct == pytest.approx(rad, rel=5e-3)


@given(st.floats(0.1, 60.0))
def test_batch_matches_adaptive(p):
    pair = cutoff_pair(solve_scattering(SQUARE), 16.0, 0.5)
    br = (0.5 / 16, 0.25)
    a = fourier_mode(pair.omega, p, 0.5, 3, br)
    b = fourier_batch(pair.omega, np.array([p]), 0.5, 3, br, order=32)[0]
    assert b == pytest.approx(a, rel=1e-7, abs=1e-12)
