"""Acceptance criteria; run with ``pytest tests/test_acceptance.py -s`` to see the verdict lines."""
import subprocess
import sys
from functools import lru_cache

import numpy as np

from modpolar.centered import (
    PowerTables,
    centered_report,
    lemma42_propagation,
    product_formula_check,
)
from modpolar.errors import EquivalenceViolation, IllConditioned
from modpolar.generators_casebook import CENTERED, NOT_CENTERED, corpus, example312_diagnostic
from modpolar.hilbert_module import compose, iterate_T_n, op_norm, range_projection
from modpolar.polar import (
    alpha_intertwine_check,
    check_existence_conditions,
    polar_decompose,
    polar_decompose_via_limit,
    verify_polar_identities,
)

from _util import SHAPES, operator, scalar_op, shift
from test_centered import late_failure

TOL = 1e-8
ALPHAS = (0.5, 1.0, 2.0, 3.7)
CONTRACT = ("factorization", "initial_projection", "final_projection")
BUNDLE = ("abs_star_conjugation", "intertwining", "adjoint_factorization", "partial_isometry")


def verdict(n, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, detail


@lru_cache(maxsize=None)
def polar_corpus(size=500, seed=20241015):
    """Seeded operators over every shape with k, m in 1..3; every third is rank deficient."""
    out = []
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(size)):
        r = np.random.default_rng(child)
        shape = SHAPES[i % len(SHAPES)]
        k, m = int(r.integers(1, 4)), int(r.integers(1, 4))
        t = operator(r, shape, k, m, deficient=i % 3 == 0)
        out.append((t, polar_decompose(t)))
    return tuple(out)


@lru_cache(maxsize=None)
def labeled_corpus():
    return tuple(corpus(8, 1000))


def test_1_polar_contract():
    worst = max(verify_polar_identities(t, f).residuals[k] for t, f in polar_corpus() for k in CONTRACT)
    verdict(1, worst <= TOL, f"polar contract on 500 operators, max residual {worst:.2e} <= {TOL:g}")


def test_2_abs_star_bundle_and_powers():
    bundle = max(verify_polar_identities(t, f).residuals[k] for t, f in polar_corpus() for k in BUNDLE)
    powers = max(alpha_intertwine_check(f, a).max_residual for _, f in polar_corpus() for a in ALPHAS)
    worst = max(bundle, powers)
    verdict(2, worst <= TOL, f"|T*| bundle max {bundle:.2e}, power identities max {powers:.2e} <= {TOL:g}")


def test_3_existence_unanimity():
    reports = [check_existence_conditions(t) for t, _ in polar_corpus()]
    bad = sum(not (rep.unanimous and all(rep.conditions)) for rep in reports)
    verdict(3, bad == 0, f"existence conditions all true on {len(reports)} operators, {bad} disagreements")


def test_4_uniqueness_cross_check():
    diffs, gated = [], 0
    for t, f in polar_corpus():
        try:
            v = polar_decompose_via_limit(t).U
        except IllConditioned:
            gated += 1
            continue
        diffs.append(op_norm(f.U - v))
    total = len(polar_corpus())
    share = len(diffs) / total
    worst = max(diffs, default=0.0)
    ok = share >= 0.9 and worst <= 1e-6
    verdict(4, ok, f"{len(diffs)}/{total} pass the gate ({gated} gated), max |U - V| {worst:.2e} <= 1e-6")


def test_5_resolvent_closed_form():
    r = np.random.default_rng(5)
    gap, excess = 0.0, -np.inf
    for trial in range(200):
        d = int(r.integers(1, 9))
        t_eig = r.uniform(0.01, 3.0, d)
        t_eig[r.uniform(size=d) < 0.3] = 0.0
        shape = SHAPES[trial % len(SHAPES)]
        t = scalar_op(np.diag(t_eig), shape)
        p = range_projection(t)
        pos = t_eig[t_eig > 0]
        for n in (1, 2, 3, 10, 100, 1000):
            t_n = iterate_T_n(t, n)
            closed = float(np.max(1 / (1 + n * pos))) if pos.size else 0.0
            gap = max(gap, abs(op_norm(t_n - p) - closed))
            excess = max(excess, op_norm(compose(t_n, t) - t) - 1 / n)
    ok = gap <= 1e-12 and excess <= 0
    verdict(5, ok, f"|T_n - P| matches 1/(1+nt) within {gap:.1e}; max(|T_n T - T| - 1/n) = {excess:.1e}")


def test_6_centered_unanimity():
    violations, wrong, checked = 0, 0, 0
    for item in labeled_corpus():
        try:
            rep = centered_report(item.op, 8)
        except EquivalenceViolation:
            violations += 1
            continue
        if item.label in (CENTERED, NOT_CENTERED):
            checked += 1
            wrong += rep.centered is not (item.label == CENTERED)
    ok = violations == 0 and wrong == 0
    verdict(6, ok, f"1000 operators at n_max=8: {violations} violations, {wrong}/{checked} labels wrong")


def test_7_product_formula_on_shifts():
    r = np.random.default_rng(7)
    worst, missing = 0.0, 0
    for trial in range(200):
        weights = r.uniform(0.1, 3.0, int(r.integers(1, 6)))
        tab = PowerTables(polar_decompose(shift(weights, SHAPES[trial % len(SHAPES)])))
        for k in range(1, 6):
            rep = product_formula_check(tab, k)
            missing += not rep.applicable
            worst = max(worst, rep.residual)
    ok = missing == 0 and worst <= TOL
    verdict(7, ok, f"200 weighted shifts, k <= 5: max residual {worst:.2e}, {missing} not applicable")


def test_8_propagation():
    ops = [item.op for item in labeled_corpus()] + [late_failure(fb) for fb in (2, 3, 4)]
    applicable, inconsistent = 0, 0
    for t in ops:
        tab = PowerTables(polar_decompose(t))
        for n in range(1, 7):
            rep = lemma42_propagation(tab, n)
            if rep.applicable:
                applicable += 1
                inconsistent += not rep.consistent
    ok = inconsistent == 0 and applicable > 0
    verdict(8, ok, f"{applicable} applicable (operator, n <= 6) cases, {inconsistent} mixed chains")


def test_9_truncation_growth():
    recs = {d: example312_diagnostic(d, 1e-2) for d in (1, 10, 100)}
    base = recs[1].n_required
    ratios = {d: rec.n_required / (d * base) for d, rec in recs.items()}
    ok = all(0.5 <= x <= 2 for x in ratios.values())
    counts = ", ".join(f"d={d}: {rec.n_required}" for d, rec in recs.items())
    verdict(9, ok, f"n_required {counts}; ratio to linear {min(ratios.values()):.3f}..{max(ratios.values()):.3f}")


def test_10_verify_determinism():
    argv = [sys.executable, "-m", "modpolar", "verify", "--suite", "all", "--seed", "42", "--trials", "100"]
    runs = [subprocess.run(argv, capture_output=True, check=False) for _ in range(2)]
    same = runs[0].stdout == runs[1].stdout and bool(runs[0].stdout)
    codes = [p.returncode for p in runs]
    verdict(10, same and codes == [0, 0], f"two verify runs byte-identical: {same}, exit codes {codes}")
