"""Declarative registry of verification checks.

Each check is a function ``(params, seed) -> Outcome`` registered with its suite
and a short anchor phrase; ``describe`` and ``run`` both read this registry.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

SUITES = ("poincare", "graph", "scattering", "symmetrization", "bogoliubov", "budget")

CSV_HEADERS = {
    "poincare": ("check", "d", "M", "p_or_alpha", "eps", "lhs", "rhs", "ratio_or_eig", "pass"),
    "graph": ("M", "d", "p", "quantity", "value", "lower", "upper"),
    "scattering": ("r", "omega"),
    "symmetrization": ("check", "ell", "lambda", "n", "value", "bound_shape", "ratio"),
    "bogoliubov": ("k1", "k2", "k3", "psq", "Bp", "deficit"),
    "budget": ("kappa", "alpha", "e1", "e2", "feasible"),
}

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "poincare": {
        "gap_n": 256,
        "calibration_n_d1": 512,
        "calibration_n_d2": 128,
        "calibration_M": [2, 4],
        "calibration_eps": [0.2, 0.05],
        "staircase_N": [1, 2, 4],
        "kinetic_n": 8192,
        "kinetic_M": 4,
        "kinetic_alpha": [0.0, 1.0],
    },
    "graph": {"M": [4, 8, 16, 32], "d": 1, "trials": 64},
    "scattering": {"lambda_V": 2.0, "R": 0.5, "n_r": 4096, "born_lambda": 1e-3},
    "symmetrization": {
        "potential": {"kind": "bump", "amplitude": 4.0, "R": 0.5},
        "ell": 16.0,
        "lambda": 0.5,
        "order": 64,
        "max_mode": 3,
        "spot_pairs": 10,
        "boundary_ell": [8.0, 16.0, 32.0],
        "n_over_ell": 0.5,
        "split_cutoff": 48,
        "split_samples": 100,
    },
    "bogoliubov": {
        "samples": 200,
        "n_max": 80,
        "max_ratio": 0.95,
        "potential": {"kind": "square", "amplitude": 2.0, "R": 0.5},
        "n": 4.0,
        "ell": [16.0, 32.0],
        "mu": math.pi / 2,
        "cutoff": 64,
        "table_cutoff": 8,
    },
    "budget": {
        "K": 20.0,
        "kappa_steps": 60,
        "alpha": [0.0, 0.001, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0],
        "N": 1000000.0,
        "a0": 1.0,
        "C0": 1.0,
    },
}


@dataclass
class Outcome:
    measured: Any
    reference: Any
    tolerance: Any
    verdict: str
    params: Dict[str, Any] = field(default_factory=dict)
    rows: List[Sequence[Any]] = field(default_factory=list)
    diagnostics: str = ""


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    anchor: str
    fn: Callable[[Dict[str, Any], int], Outcome]


REGISTRY: List[Check] = []


def check(suite: str, name: str, anchor: str):
    def deco(fn):
        REGISTRY.append(Check(suite, name, anchor, fn))
        return fn
    return deco


def checks_for(suites: Sequence[str]) -> List[Check]:
    wanted = set(suites)
    return [c for c in REGISTRY if c.suite in wanted]


def default_params() -> Dict[str, Dict[str, Any]]:
    return copy.deepcopy(DEFAULTS)


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


# -- poincare ---------------------------------------------------------------


@check("poincare", "neumann_gap", "C_Omega^{-1} = pi^2 L^{-2}")
def _neumann_gap(P, seed):
    from .grid import unit_grid
    from .spectral import assemble_neumann_laplacian, eigen_lowest, neumann_eigenvalue_1d

    n = P["gap_n"]
    lam = eigen_lowest(assemble_neumann_laplacian(unit_grid(1, n)), 2, seed=seed)[1].value
    closed = float(neumann_eigenvalue_1d(1, n))
    lam2 = eigen_lowest(assemble_neumann_laplacian(unit_grid(1, n, L=2.0)), 2, seed=seed)[1].value
    rel_pi = _rel(lam, math.pi**2)
    ok = rel_pi <= 1e-4 and abs(lam - closed) <= 1e-8 and abs(lam2 / lam - 0.25) <= 1e-6
    rows = [("neumann_gap", 1, 1, "", "", lam, math.pi**2, lam, ok)]
    return Outcome({"lambda1": lam, "closed_form": closed, "L2_ratio": lam2 / lam}, {"lambda1": math.pi**2, "L2_ratio": 0.25},
                   {"rel_pi2": 1e-4, "closed_form_abs": 1e-8, "L_scaling": 1e-6}, _verdict(ok), {"n": n, "d": 1}, rows)


def _calibration(P, d):
    from .grid import unit_grid
    from .poincare import calibrate_constant

    n = P[f"calibration_n_d{d}"]
    res = calibrate_constant(unit_grid(d, n), P["calibration_M"], P["calibration_eps"])
    rows = [("operator_inequality", d, r.M, "", r.eps, r.C_star, "", r.x, np.isfinite(r.C_star)) for r in res.rows]
    return Outcome({"slope": res.slope, "C_star": [r.C_star for r in res.rows]}, {"slope": 1.0}, {"slope": 0.25},
                   _verdict(res.passed), {"d": d, "n": n, "M": P["calibration_M"], "eps_times_lambda1": P["calibration_eps"]}, rows)


@check("poincare", "operator_inequality_d1", "eps(-Delta) + C sum Q_i - Q_Lambda >= 0")
def _calibration_d1(P, seed):
    return _calibration(P, 1)


@check("poincare", "operator_inequality_d2", "eps(-Delta) + C sum Q_i - Q_Lambda >= 0")
def _calibration_d2(P, seed):
    return _calibration(P, 2)


@check("poincare", "staircase_sharpness", "have the same order of N")
def _staircase(P, seed):
    from .poincare import sharpness_sweep

    Ns = P["staircase_N"]
    sw = sharpness_sweep(Ns, 2.0, 1)
    ok = sw.slope is not None and abs(sw.slope) <= 0.2 and sw.spread < 2.0
    rows = [("staircase", 1, r.M, 2, "", r.lhs, r.rhs, r.ratio, "") for r in sw.rows]
    return Outcome({"ratios": sw.ratios, "slope": sw.slope, "spread": sw.spread}, {"slope": 0.0},
                   {"abs_slope": 0.2, "spread": 2.0}, _verdict(ok), {"N": Ns, "p": 2, "d": 1}, rows)


@check("poincare", "kinetic_localization", "Kinetic energy localization")
def _kinetic(P, seed):
    from .poincare import kinetic_refinement

    n, M = P["kinetic_n"], P["kinetic_M"]
    vals, ok, rows = {}, True, []
    for a in P["kinetic_alpha"]:
        ref = kinetic_refinement(1, n, M, a)
        c1, c2 = ref.values[n], ref.values[2 * n]
        vals[str(a)] = [c1, c2]
        good = np.isfinite(c1) and np.isfinite(c2) and ref.stable
        ok = ok and good
        rows.append(("kinetic_localization", 1, M, a, "", c1, c2, "", good))
    return Outcome({"C_star": vals}, "finite C, stable under doubling", {"relative": 0.05}, _verdict(ok),
                   {"n": n, "M": M, "d": 1}, rows)


# -- graph ------------------------------------------------------------------


@check("graph", "discrete_poincare_scaling", "Cheeger constant")
def _graph_poincare(P, seed):
    from .graph import GridGraph, discrete_poincare_constant
    from .poincare import loglog_slope

    Ms, d = P["M"], P["d"]
    res = [discrete_poincare_constant(GridGraph(M, d), 2.0, P["trials"], seed) for M in Ms]
    slope = loglog_slope(Ms, [r.constant for r in res])
    rows = [(r.M, d, 2, "poincare_constant", r.constant, r.trials_max, r.constant) for r in res]
    ok = slope is not None and abs(slope - 1.0) <= 0.15
    return Outcome({"constants": [r.constant for r in res], "slope": slope}, {"slope": 1.0}, {"slope": 0.15},
                   _verdict(ok), {"M": Ms, "d": d, "p": 2}, rows)


@check("graph", "cheeger_scaling", "inversely proportional")
def _graph_cheeger(P, seed):
    from .graph import GridGraph, cheeger_constant, spectral_gap

    Ms, d = P["M"], P["d"]
    rows, hM, exact_ok = [], [], True
    for M in Ms:
        g = GridGraph(M, d)
        c = cheeger_constant(g)
        rows.append((M, d, "", "cheeger", c.value, c.lower, c.upper))
        rows.append((M, d, "", "spectral_gap", spectral_gap(g), "", ""))
        hM.append(c.value * M)
        if d == 1 and M <= 16:
            exact_ok = exact_ok and c.exact and abs(c.value - 1.0 / (M // 2)) <= 1e-12
    spread = max(hM) / min(hM)
    ok = exact_ok and spread <= 2.0
    return Outcome({"h_times_M": hM, "spread": spread, "exact_small": exact_ok}, {"h_d1": "1/floor(M/2)"},
                   {"spread": 2.0}, _verdict(ok), {"M": Ms, "d": d}, rows)


# -- scattering ---------------------------------------------------------------


@check("scattering", "square_well_length", "scattering length of V")
def _square_well(P, seed):
    from .scattering import PotentialSpec, solve_scattering, square_well_a0

    V = PotentialSpec.square(P["lambda_V"], P["R"])
    sol = solve_scattering(V, n_r=P["n_r"])
    ref = square_well_a0(P["lambda_V"], P["R"])
    err = _rel(sol.a0, ref)
    rows = list(zip(sol.r, sol.omega_samples))
    return Outcome({"a0": sol.a0}, {"a0": ref}, {"relative": 1e-6}, _verdict(err <= 1e-6),
                   {"lambda_V": P["lambda_V"], "R": P["R"], "n_r": P["n_r"]}, rows)


@check("scattering", "integral_identity", "8 pi a0 = int V(1 - omega)")
def _integral_identity(P, seed):
    from .scattering import PotentialSpec, solve_scattering

    sol = solve_scattering(PotentialSpec.square(P["lambda_V"], P["R"]), n_r=P["n_r"])
    lhs = 8 * math.pi * sol.a0
    rhs = sol.integral_route()
    return Outcome({"int_V_f": rhs}, {"8_pi_a0": lhs}, {"relative": 1e-6}, _verdict(_rel(rhs, lhs) <= 1e-6),
                   {"lambda_V": P["lambda_V"], "R": P["R"]})


@check("scattering", "born_limit", "scattering length of V")
def _born(P, seed):
    from .scattering import PotentialSpec, solve_scattering

    V = PotentialSpec.square(P["born_lambda"], P["R"])
    a0 = solve_scattering(V, n_r=P["n_r"]).a0
    born = V.integral() / (8 * math.pi)
    return Outcome({"a0": a0}, {"born": born}, {"relative": 0.01}, _verdict(_rel(a0, born) <= 0.01),
                   {"lambda_V": P["born_lambda"], "R": P["R"]})


@check("scattering", "cutoff_equation_residual", "modified scattering equation")
def _cutoff_resid(P, seed):
    from .scattering import PotentialSpec, cutoff_pair, cutoff_residual, solve_scattering

    V = PotentialSpec.bump(4.0, P["R"])
    pair = cutoff_pair(solve_scattering(V, n_r=8192), 16.0, 0.5)
    r = np.linspace(0.05, 0.45, 41)
    res = {h: float(np.max(np.abs(cutoff_residual(pair, r, h)))) for h in (1e-3, 5e-4)}
    order = math.log2(res[1e-3] / res[5e-4]) if res[5e-4] > 0 else math.inf
    return Outcome({"max_residual": res[5e-4], "fd_order": order}, {"fd_order": 2.0}, None, "info",
                   {"ell": 16.0, "lambda": 0.5, "h": [1e-3, 5e-4]})


# -- symmetrization ---------------------------------------------------------------


def _pair(P):
    from .scattering import PotentialSpec, cutoff_pair, solve_scattering

    V = PotentialSpec.from_config(P["potential"])
    return V, cutoff_pair(solve_scattering(V, n_r=8192), P["ell"], P["lambda"])


@check("symmetrization", "identity_d2_full", "the following useful identity")
def _identity_d2(P, seed):
    from .symmetrization import identity_matrix, pair_kernel

    V, pair = _pair(P)
    res = identity_matrix(pair_kernel(pair, 2), P["max_mode"], P["order"], method="fft")
    ok = res.offdiag_max <= 1e-3 and res.diag_residual <= 1e-3
    rows = [("identity_d2_offdiag", P["ell"], P["lambda"], "", res.offdiag_max, "0", ""),
            ("identity_d2_diag", P["ell"], P["lambda"], "", res.diag_residual, "0", "")]
    return Outcome({"offdiag_max": res.offdiag_max, "diag_residual": res.diag_residual}, 0.0, 1e-3, _verdict(ok),
                   {"d": 2, "order": P["order"], "max_mode": P["max_mode"], "ell": P["ell"], "lambda": P["lambda"]}, rows)


@check("symmetrization", "identity_d3_spot", "the following useful identity")
def _identity_d3(P, seed):
    from .symmetrization import pair_kernel, random_mode_pairs, spot_check

    V, pair = _pair(P)
    pairs = random_mode_pairs(P["spot_pairs"], 3, P["max_mode"], seed)
    res = spot_check(pair_kernel(pair, 3), pairs, P["order"])
    worst = max(res)
    rows = [("identity_d3_spot", P["ell"], P["lambda"], "", worst, "0", "")]
    return Outcome({"max_residual": worst, "pairs": [list(map(list, pq)) for pq in pairs]}, 0.0, 1e-3,
                   _verdict(worst <= 1e-3), {"d": 3, "order": P["order"], "seed": seed}, rows)


@check("symmetrization", "boundary_effect_scaling", "Boundary effects")
def _boundary(P, seed):
    from .scattering import PotentialSpec
    from .symmetrization import boundary_effect

    V = PotentialSpec.from_config(P["potential"])
    r1, r2, rows = [], [], []
    for ell in P["boundary_ell"]:
        n = P["n_over_ell"] * ell
        b = boundary_effect(n, ell, P["lambda"], V, (2.0,))
        a = b.l1 * ell / math.log(ell)
        c = b.norms[2.0] * math.sqrt(ell)
        r1.append(a)
        r2.append(c)
        rows.append(("boundary_l1", ell, P["lambda"], n, b.l1, "log(ell)/ell", a))
        rows.append(("boundary_l2", ell, P["lambda"], n, b.norms[2.0], "ell^-1/2", c))
    s1, s2 = max(r1) / min(r1), max(r2) / min(r2)
    return Outcome({"l1_ratios": r1, "l2_ratios": r2, "l1_spread": s1, "l2_spread": s2}, "bounded ratios",
                   {"spread": 3.0}, _verdict(s1 < 3 and s2 < 3), {"ell": P["boundary_ell"], "n_over_ell": P["n_over_ell"]}, rows)


@check("symmetrization", "kernel_split", "K_m + 2 Q^eps + 2 Q^bc + n omega_hat(0) V_l")
def _split(P, seed):
    from .scattering import PotentialSpec
    from .symmetrization import kernel_split_residual

    V = PotentialSpec.from_config(P["potential"])
    ell, lam, c = P["ell"], P["lambda"], P["split_cutoff"]
    n = P["n_over_ell"] * ell
    out, rows = {}, []
    for cut in (c, 2 * c):
        r = kernel_split_residual(n, ell, lam, V, cutoff=cut, samples=P["split_samples"], seed=seed)
        out[str(cut)] = r.relative
        rows.append(("kernel_split_cutoff_%d" % cut, ell, lam, n, r.residual, "cutoff^-q", r.relative))
    a, b = out[str(c)], out[str(2 * c)]
    q = math.log2(a / b) if a > 0 and b > 0 else None
    return Outcome({"relative_residual": out, "observed_order": q}, {"relative_residual": 0.0}, None, "info",
                   {"ell": ell, "lambda": lam, "n": n, "samples": P["split_samples"], "seed": seed}, rows)


# -- bogoliubov ---------------------------------------------------------------


@check("bogoliubov", "fock_oracle", "real constants A, B such that A > |B|")
def _fock(P, seed):
    from .bogoliubov import ModeCoefficients, per_mode_deficit, single_mode_ground_energy

    rng = np.random.default_rng(seed)
    A = rng.uniform(0.5, 50.0, P["samples"])
    B = A * rng.uniform(-P["max_ratio"], P["max_ratio"], P["samples"])
    viol, gap = 0.0, 0.0
    for a, b in zip(A, B):
        c = ModeCoefficients(float(a), float(b))
        e = single_mode_ground_energy(c, P["n_max"])
        half = -per_mode_deficit(c) / 2
        viol = max(viol, half - e)
        gap = max(gap, abs(e - half))
    ok = viol <= 1e-8 and gap <= 1e-6
    return Outcome({"max_below_bound": viol, "max_abs_gap": gap}, 0.0, {"below": 1e-8, "gap": 1e-6}, _verdict(ok),
                   {"samples": P["samples"], "n_max": P["n_max"], "max_ratio": P["max_ratio"], "seed": seed})


@check("bogoliubov", "deficit_precision", "A - sqrt(A^2 - B^2)")
def _deficit(P, seed):
    from .bogoliubov import ModeCoefficients, deficit_reference, per_mode_deficit

    rng = np.random.default_rng(seed + 1)
    A = rng.uniform(0.5, 50.0, P["samples"])
    B = A * 10.0 ** rng.uniform(-12, -6, P["samples"]) * rng.choice([-1.0, 1.0], P["samples"])
    worst = 0.0
    for a, b in zip(A, B):
        ref = deficit_reference(float(a), float(b))
        got = Decimal(per_mode_deficit(ModeCoefficients(float(a), float(b))))
        worst = max(worst, float(abs(got - ref) / ref))
    return Outcome({"max_relative_error": worst}, 0.0, 1e-14, _verdict(worst <= 1e-14),
                   {"samples": P["samples"], "ratio_range": [1e-12, 1e-6], "seed": seed + 1})


@check("bogoliubov", "lhy_coefficient", "128/15 sqrt(pi)")
def _lhy(P, seed):
    from .bogoliubov import lhy_coefficient

    v = lhy_coefficient()
    ident = abs(15 * math.sqrt(math.pi) * v - 128) / 128
    ok = round(v, 6) == 4.814418 and ident <= 1e-12
    return Outcome({"value": v, "identity_residual": ident}, {"value_6dp": 4.814418}, 1e-12, _verdict(ok), {})


@check("bogoliubov", "mode_sum_shape", "Bogoliubov quadratic Hamiltonian")
def _mode_sum(P, seed):
    from .bogoliubov import QuadraticModeSystem, mode_sum_lower_bound
    from .scattering import PotentialSpec

    V = PotentialSpec.from_config(P["potential"])
    consts, change, rows, ok = [], [], [], True
    for i, ell in enumerate(P["ell"]):
        sys = QuadraticModeSystem(P["n"], ell, V, P["mu"], P["cutoff"])
        full = mode_sum_lower_bound(sys)
        half = mode_sum_lower_bound(sys, cutoff=P["cutoff"] // 2)
        consts.append((full.simplified - full.full) / (P["n"] / ell) ** 2)
        change.append(abs(full.full - half.full) / abs(full.full) if full.full else 0.0)
        ok = ok and full.full <= 0 and np.isfinite(consts[-1])
        if i == 0:
            keep = np.all(full.k <= P["table_cutoff"], axis=1)
            rows = [(*k, a, b, c) for k, a, b, c in zip(full.k[keep], full.psq[keep], full.B[keep], full.deficit[keep])]
    spread = max(consts) / min(consts) if min(consts) > 0 else math.inf
    # the doubling criterion is applied at the first (coarsest) scale; finer ell needs a cutoff growing like ell
    ok = ok and spread <= 2.0 and change[0] < 0.01
    return Outcome({"rescaled_difference": consts, "spread": spread, "cutoff_doubling_change": change}, "bounded",
                   {"spread": 2.0, "cutoff_change": 0.01}, _verdict(ok),
                   {"n": P["n"], "ell": P["ell"], "mu": P["mu"], "cutoff": P["cutoff"]}, rows)


# -- budget ---------------------------------------------------------------------


@check("budget", "feasibility_frontier", "kappa in (0, 2/11)")
def _frontier(P, seed):
    from .budget import KAPPA_FRONTIER, alpha_ceiling, bec_feasible, frontier_by_bisection, frontier_sweep

    at = bec_feasible(KAPPA_FRONTIER)
    below = bec_feasible(KAPPA_FRONTIER - Fraction(1, 10**12))
    kstar = frontier_by_bisection()
    ok = (not at.feasible) and below.feasible and abs(kstar - 2 / 11) <= 1e-6
    steps = P["kappa_steps"]
    kappas = [Fraction(i, steps) * Fraction(2, 3) for i in range(1, steps)] + [KAPPA_FRONTIER]
    kappas = sorted(set(kappas))
    alphas = [Fraction(a).limit_denominator(10**6) for a in P["alpha"]]
    rows = [(r.kappa, r.alpha, r.e1, r.e2, r.feasible) for r in frontier_sweep(kappas, alphas)]
    return Outcome({"exact_at_2_11": at.feasible, "exact_below": below.feasible, "bisection": kstar,
                    "alpha_max_below": float(alpha_ceiling(KAPPA_FRONTIER - Fraction(1, 10**12)))},
                   {"kappa": 2 / 11}, {"bisection": 1e-6}, _verdict(ok), {"kappa_steps": steps}, rows)


@check("budget", "exponent_simplification", "N^{-alpha kappa/2} + N^{(2+alpha)kappa/2 + (5kappa-2)/2 + (2-3kappa)/4}")
def _simplify(P, seed):
    from .budget import e2_unsimplified, excitation_exponents

    rng = np.random.default_rng(seed)
    ks = rng.uniform(0, 2 / 3, 100)
    als = rng.uniform(0, 10, 100)
    worst = max(abs(excitation_exponents(k, a).e2 - e2_unsimplified(k, a)) for k, a in zip(ks, als))
    exact = all(excitation_exponents(Fraction(k).limit_denominator(1000), Fraction(a).limit_denominator(1000)).e2
                == e2_unsimplified(Fraction(k).limit_denominator(1000), Fraction(a).limit_denominator(1000))
                for k, a in zip(ks, als))
    return Outcome({"max_abs_difference": worst, "rational_identical": exact}, 0.0, 1e-13,
                   _verdict(worst <= 1e-13 and exact), {"points": 100, "seed": seed})


@check("budget", "energy_assumption_kappa0", "equals sqrt(N) when kappa = 0")
def _energy(P, seed):
    from .budget import energy_assumption, energy_exponents

    N, a0, C0 = P["N"], P["a0"], P["C0"]
    e = energy_assumption(N, 0, a0, C0)
    sub = e - 4 * math.pi * a0 * N
    lead, exp2 = energy_exponents(0)
    ok = exp2 == Fraction(1, 2) and lead == 1 and abs(sub - C0 * math.sqrt(N)) <= 1e-9 * e
    l2, s2 = energy_exponents(Fraction(2, 11))
    return Outcome({"subleading": sub, "exponent": exp2, "exponents_at_2_11": [l2, s2]}, {"subleading": C0 * math.sqrt(N)},
                   {"relative_to_total": 1e-9}, _verdict(ok), {"N": N, "a0": a0, "C0": C0})


@check("budget", "cell_size", "K=20 suffices")
def _cell(P, seed):
    from .budget import choose_cell_size

    K = P["K"]
    cs = choose_cell_size(1e-4, 1.0, K)
    ident = cs.rho_ell3 * math.sqrt(1e-4) * K**3
    small = choose_cell_size(1.0, 0.25, 1.0)
    ok = abs(ident - 1) <= 1e-12 and abs(small.ell - 2.0) <= 1e-15
    return Outcome({"ell": cs.ell, "rho_ell3": cs.rho_ell3, "identity": ident}, {"identity": 1.0, "ell_K1": 2.0},
                   1e-12, _verdict(ok), {"rho": 1e-4, "a": 1.0, "K": K})
