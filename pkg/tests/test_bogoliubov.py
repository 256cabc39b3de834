import math
from decimal import Decimal

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from poincare_verifier.bogoliubov import (
    BogoliubovError,
    ModeCoefficients,
    QuadraticModeSystem,
    deficit_reference,
    lhy_coefficient,
    mode_sum_lower_bound,
    per_mode_deficit,
    single_mode_ground_energy,
    two_mode_ground_energy,
)
from poincare_verifier.scattering import PotentialSpec

SQUARE = PotentialSpec.square(2.0, 0.5)


def mp_deficit(A, B):
    with mpmath.workdps(50):
        a, b = mpmath.mpf(A), mpmath.mpf(B)
        return a - mpmath.sqrt(a * a - b * b)


def test_deficit_examples():
    assert per_mode_deficit(ModeCoefficients(3.0, 0.0)) == 0.0
    assert per_mode_deficit(ModeCoefficients(5.0, 3.0)) == 1.0


def test_deficit_rejects():
    for A, B in [(1.0, 1.0), (1.0, -2.0), (0.0, 0.0)]:
        with pytest.raises(BogoliubovError):
            per_mode_deficit(ModeCoefficients(A, B))


def test_near_cancellation():
    A, B = 1.0, 1 - 1e-12
    got = per_mode_deficit(ModeCoefficients(A, B))
    ref = float(mp_deficit(A, B))
    assert math.isfinite(got)
    assert got == pytest.approx(ref, rel=1e-14)
    assert float(deficit_reference(A, B)) == pytest.approx(ref, rel=1e-15)


@pytest.mark.parametrize("ratio", [1e-12, 1e-9, 1e-6])
def test_small_b_keeps_digits(ratio):
    A, B = 2.0, 2.0 * ratio
    got = per_mode_deficit(ModeCoefficients(A, B))
    assert got == pytest.approx(float(mp_deficit(A, B)), rel=1e-14)
    naive = A - math.sqrt(A * A - B * B)
    if ratio <= 1e-9:
        assert naive == 0.0 and got > 0


def test_decimal_reference_is_exact_input():
    assert deficit_reference(5.0, 3.0) == Decimal(1)


@given(st.floats(0.5, 50.0), st.floats(-0.999, 0.999))
def test_symmetry_in_b(A, r):
    B = r * A
    assert per_mode_deficit(ModeCoefficients(A, B)) == per_mode_deficit(ModeCoefficients(A, -B))


@given(st.floats(0.5, 50.0), st.floats(0.01, 0.95))
def test_monotone(A, r):
    B = r * A
    h = 1e-6 * A
    d = per_mode_deficit(ModeCoefficients(A, B))
    assert per_mode_deficit(ModeCoefficients(A, B + h)) > d
    assert per_mode_deficit(ModeCoefficients(A + h, B)) < d


def test_fock_examples():
    assert single_mode_ground_energy(ModeCoefficients(2.0, 0.0), 10) == 0.0
    c = ModeCoefficients(5.0, 3.0)
    assert single_mode_ground_energy(c, 60) == pytest.approx(-0.5, abs=1e-10)
    err = [abs(single_mode_ground_energy(c, n) + 0.5) for n in (10, 20, 40)]
    assert err[0] > err[1] > err[2]
    with pytest.raises(BogoliubovError):
        single_mode_ground_energy(c, 1)


@given(st.floats(0.5, 50.0), st.floats(-0.95, 0.95))
def test_oracle_dominance(A, r):
    c = ModeCoefficients(A, r * A)
    exact = -per_mode_deficit(c) / 2
    e80 = single_mode_ground_energy(c, 80)
    # truncation raises the Rayleigh minimum, so the bound holds with no slack at all
    assert e80 >= exact - 1e-12 * A
    assert e80 - exact <= 1e-9 * A


@given(st.floats(0.5, 50.0), st.floats(-0.9, 0.9))
def test_two_mode_oracle(A, r):
    c = ModeCoefficients(A, r * A)
    assert two_mode_ground_energy(c, 120) == pytest.approx(-per_mode_deficit(c), rel=1e-8, abs=1e-12)


def test_lhy():
    v = lhy_coefficient()
    with mpmath.workdps(30):
        ref = mpmath.mpf(128) / (15 * mpmath.sqrt(mpmath.pi))
    assert v == pytest.approx(float(ref), rel=1e-15)
    assert round(v, 6) == 4.814418
    assert 15 * math.sqrt(math.pi) * v == pytest.approx(128.0, rel=1e-15)


def test_mode_sum_zero_potential():
    s = QuadraticModeSystem(4, 16.0, PotentialSpec.square(0.0, 0.5), cutoff=8)
    r = mode_sum_lower_bound(s)
    assert r.full == 0.0 and r.simplified == 0.0 and not r.bad_modes


@pytest.fixture(scope="module")
def square16():
    return QuadraticModeSystem(4, 16.0, SQUARE)


def test_mode_sum_signs(square16):
    r = mode_sum_lower_bound(square16, cutoff=12)
    assert r.full < 0 and r.simplified < 0
    assert np.all(r.deficit >= 0)
    assert len(r.k) == 13**3 - 1
    # within one mode the full deficit is at least the simplified one B^2 / (2 A)
    A = r.psq - square16.mu
    assert np.all(r.deficit >= r.B**2 / (2 * A) * (1 - 1e-12))


def test_mode_sum_shape(square16):
    sys32 = QuadraticModeSystem(4, 32.0, SQUARE)
    diffs = []
    for s in (square16, sys32):
        r = mode_sum_lower_bound(s, cutoff=32)
        diffs.append((r.simplified - r.full) / (s.n / s.ell) ** 2)
    assert all(abs(d) < 1.0 for d in diffs)
    assert max(map(abs, diffs)) / min(map(abs, diffs)) < 2.0


def test_window_enforced():
    s = QuadraticModeSystem(4, 16.0, SQUARE, mu=0.01, cutoff=4)
    with pytest.raises(BogoliubovError, match="window"):
        mode_sum_lower_bound(s)
    lo, hi = s.window
    assert lo == pytest.approx(16 * math.pi * s.a0 * 4 / 16)
    assert hi == pytest.approx(math.pi - 8 * math.pi * s.a0 * 4 / 16)


def test_bad_modes_reported():
    # mu above pi^2 makes A_p negative at the first modes
    s = QuadraticModeSystem(0.5, 16.0, SQUARE, mu=2.0, cutoff=4)
    s.mu = 10.0
    s.check_window = lambda: None
    with pytest.raises(BogoliubovError, match=r"\(0, 0, 1\)"):
        mode_sum_lower_bound(s)
    r = mode_sum_lower_bound(s, strict=False)
    assert (0, 0, 1) in r.bad_modes and (1, 1, 1) not in r.bad_modes


def test_mode_csv(tmp_path, square16):
    r = mode_sum_lower_bound(square16, cutoff=3)
    p = tmp_path / "modes.csv"
    r.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "k1,k2,k3,psq,Bp,deficit"
    assert len(lines) == 1 + 4**3 - 1
    assert lines[1].startswith("0,0,1,")
