import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from poincare_verifier.budget import (
    ALPHA_GRID,
    KAPPA_FRONTIER,
    RegimeParams,
    alpha_ceiling,
    bec_feasible,
    choose_cell_size,
    e2_unsimplified,
    energy_assumption,
    energy_exponents,
    excitation_exponents,
    frontier_by_bisection,
    frontier_sweep,
    cell_energy_lower_bound,
    write_frontier_csv,
)

F = Fraction


def test_exponent_examples():
    e = excitation_exponents(F(2, 11), 0)
    assert e.e2 == 0 and e.e1 == 0
    e = excitation_exponents(0.1, 0.5)
    assert e.e1 == pytest.approx(-0.025, abs=1e-15)
    assert e.e2 == pytest.approx(-0.2, abs=1e-15)
    assert excitation_exponents(F(1, 10), F(1, 2)) == type(e)(F(-1, 40), F(-1, 5))
    for k in (0.0, 0.3, 0.6):
        assert excitation_exponents(k, 0).e1 == 0


def test_exponent_domain():
    with pytest.raises(ValueError):
        excitation_exponents(F(2, 3), 0)
    with pytest.raises(ValueError):
        excitation_exponents(0.1, -1)
    with pytest.raises(ValueError):
        RegimeParams(kappa=-0.1)
    with pytest.raises(ValueError):
        RegimeParams(kappa=0.1, K=0.5)


def test_simplification_sweep():
    rng = np.random.default_rng(0)
    for k, a in zip(rng.uniform(0, 2 / 3, 100), rng.uniform(0, 10, 100)):
        assert excitation_exponents(k, a).e2 == pytest.approx(e2_unsimplified(k, a), abs=1e-14)


@given(st.fractions(0, F(2, 3) - F(1, 10**6)), st.fractions(0, 10))
def test_simplification_exact(k, a):
    assert excitation_exponents(k, a).e2 == e2_unsimplified(k, a)


@given(st.floats(0.0, 0.6), st.floats(0.0, 10.0), st.floats(1e-4, 0.05))
def test_monotonicity(k, a, h):
    e = excitation_exponents(k, a)
    ek = excitation_exponents(min(k + h, 0.66), a)
    ea = excitation_exponents(k, a + h)
    assert ek.e2 >= e.e2 and ea.e2 >= e.e2
    if k > 1e-6:
        assert ea.e2 > e.e2
    assert ek.e1 <= e.e1 and ea.e1 <= e.e1


def test_feasibility_examples():
    f = bec_feasible(0.15)
    assert f.feasible and 0 < f.witness < alpha_ceiling(0.15)
    assert excitation_exponents(0.15, f.witness).worst < 0
    g = bec_feasible(0.19)
    assert not g.feasible and g.witness is None and "e2" in g.binding
    small = bec_feasible(1e-6)
    assert small.feasible
    assert excitation_exponents(1e-6, small.witness).e2 == pytest.approx(-0.5, abs=1e-5)
    with pytest.raises(ValueError):
        bec_feasible(0)


def test_frontier_exact():
    assert KAPPA_FRONTIER == F(2, 11)
    assert not bec_feasible(F(2, 11)).feasible
    assert bec_feasible(F(2, 11) - F(1, 10**12)).feasible
    assert not bec_feasible(F(2, 11) + F(1, 10**12)).feasible
    assert alpha_ceiling(F(2, 11)) == 0


def test_frontier_narrow_window_witness():
    # just below the frontier the admissible alphas fall under the grid's 1e-3
    k = F(2, 11) - F(1, 10**9)
    assert alpha_ceiling(k) < ALPHA_GRID[0]
    f = bec_feasible(k)
    assert f.feasible and f.witness == alpha_ceiling(k) / 2


def test_frontier_bisection():
    assert frontier_by_bisection() == pytest.approx(2 / 11, abs=1e-6)
    with pytest.raises(ValueError):
        frontier_by_bisection(0.19, 0.3)


def test_frontier_csv(tmp_path):
    rows = frontier_sweep([F(1, 10), F(2, 11), 0.19], [0, 0.5])
    assert len(rows) == 6
    assert rows[1].feasible and not rows[2].feasible
    p = tmp_path / "f.csv"
    write_frontier_csv(rows, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "kappa,alpha,e1,e2,feasible"
    assert lines[3].endswith(",false") and lines[2].endswith(",true")


def test_cell_size_examples():
    c = choose_cell_size(1.0, 0.25, 1)
    assert c.ell == pytest.approx(2.0)
    c = choose_cell_size(1e-4, 1.0, 20)
    assert c.rho_ell3 == pytest.approx(0.0125, rel=1e-14)
    # GP scaling: rho = N, a = a0/N gives an N-independent cell
    ells = [choose_cell_size(N, 1.0 / N, 20).ell for N in (10, 1e3, 1e6)]
    assert ells == pytest.approx([ells[0]] * 3, rel=1e-12)


@given(st.floats(1e-8, 1e3), st.floats(1e-4, 1.0), st.floats(1.0, 100.0))
def test_cell_size_identity(rho, a, K):
    if rho * a**3 >= 1:
        with pytest.raises(ValueError):
            choose_cell_size(rho, a, K)
        return
    c = choose_cell_size(rho, a, K)
    assert c.rho_ell3 * math.sqrt(rho * a**3) * K**3 == pytest.approx(1.0, rel=1e-12)
    assert rho * c.ell**3 == pytest.approx(c.rho_ell3, rel=1e-12)


def test_cell_size_errors():
    with pytest.raises(ValueError):
        choose_cell_size(1.0, 1.0)
    with pytest.raises(ValueError):
        choose_cell_size(-1.0, 0.1)


def test_energy_assumption():
    N = 1e6
    assert energy_assumption(N, 0, 1.0, 1.0) == pytest.approx(4 * math.pi * N + math.sqrt(N), rel=1e-14)
    assert energy_assumption(N, 0.1, 2.0, 0.0) == pytest.approx(8 * math.pi * N**1.1, rel=1e-14)
    lead, sub = energy_exponents(F(2, 11))
    assert lead == F(13, 11) and sub == F(5, 11) + F(1, 2) - F(3, 22)
    with pytest.raises(ValueError):
        energy_assumption(0.5, 0.1, 1.0)


def test_cell_energy_lower_bound():
    rho, a, ell = 1e-3, 1.0, 5.0
    lead = -4 * math.pi * rho**2 * a * ell**3
    assert cell_energy_lower_bound(rho, a, ell, C=0) == pytest.approx(lead, rel=1e-15)
    corr = cell_energy_lower_bound(rho, a, ell, "sqrt") - lead
    assert -corr == pytest.approx(rho**2 * a * ell**3 * (rho * a**3) ** 0.25, rel=1e-12)
    for S in ("sqrt", "log"):
        rel = [cell_energy_lower_bound(r, a, ell, S) / (-4 * math.pi * r**2 * a * ell**3) - 1 for r in (1e-4, 1e-8, 1e-12)]
        assert rel[0] > rel[1] > rel[2] > 0
    with pytest.raises(ValueError):
        cell_energy_lower_bound(rho, a, ell, "cube")
