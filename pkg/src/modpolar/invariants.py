"""Randomized invariant suites behind ``modpolar verify``.

Every invariant draws one random instance per trial and returns a residual
(or ``None`` when the instance does not meet its hypothesis). Boolean
properties report 0.0 or 1.0 against a tolerance of 0. Each invariant gets
its own generator spawned from the suite seed, so adding an invariant does
not perturb the others, and trials run in index order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .centered import (
    PowerTables,
    cancellation_check,
    centered_report,
    lemma42_propagation,
    product_formula_check,
)
from .cstar_core import (
    AlgebraElement,
    AlgebraShape,
    alg_norm,
    alg_power,
    functional_calculus,
    spectrum,
)
from .errors import EquivalenceViolation, IllConditioned
from .generators_casebook import (
    CENTERED,
    CORPUS_SHAPES,
    NOT_CENTERED,
    GeneratorSpec,
    Kind,
    corpus,
    generate,
    random_complex,
    random_operator,
    random_unitary,
)
from .hilbert_module import (
    AdjointableOp,
    ModuleSpace,
    ModuleVector,
    closure_range_power_check,
    compose,
    inner,
    iterate_T_n,
    op_adjoint,
    op_norm,
    range_projection,
    vector_norm,
)
from .polar import (
    alpha_intertwine_check,
    check_existence_conditions,
    criterion_check,
    polar_decompose,
    polar_decompose_via_limit,
    verify_polar_identities,
)

GLOBAL = None  # placeholder tolerance: use the run's global tolerance
ALPHAS = (0.5, 1.0, 2.0, 3.7)
SUITES = ("core", "module", "polar", "centered")


@dataclass(frozen=True)
class Invariant:
    name: str
    check: Callable[[np.random.Generator], float | None]
    tol: float | None = GLOBAL


def _flag(ok: bool) -> float:
    return 0.0 if ok else 1.0


def _pick(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def _shape(rng) -> AlgebraShape:
    return AlgebraShape(_pick(rng, CORPUS_SHAPES))


def _element(rng, shape: AlgebraShape) -> AlgebraElement:
    return AlgebraElement(shape, [random_complex(rng, (n, n)) for n in shape.block_sizes])


def _hermitian(rng, shape: AlgebraShape) -> AlgebraElement:
    a = _element(rng, shape)
    return AlgebraElement(shape, [0.5 * (b + b.conj().T) for b in a.blocks])


def _commuting_pair(rng, d: int, low: float = 0.0):
    """Positive ``T`` with a repeated eigenvalue and a dense ``S`` commuting with it."""
    v = random_unitary(rng, d)
    lam = rng.uniform(low, 2.0, d)
    if d > 1:
        lam[1] = lam[0]
    if low == 0.0 and d > 2:
        lam[-1] = 0.0
    s = np.diag(random_complex(rng, d))
    if d > 1:
        s[0, 1], s[1, 0] = random_complex(rng, 2)
    return (v * lam) @ v.conj().T, v @ s @ v.conj().T


def _rel_comm(a: np.ndarray, b: np.ndarray) -> float:
    den = np.linalg.norm(a, 2) * np.linalg.norm(b, 2)
    return float(np.linalg.norm(a @ b - b @ a, 2) / den) if den > 0 else 0.0


def _low_rank(rng, shape, m: int, k: int) -> AdjointableOp:
    """Operator ``A^k -> A^m`` whose summands have rank below ``min(k, m)·n``."""
    sh = AlgebraShape(shape)
    blocks = []
    for n in sh.block_sizes:
        r = int(rng.integers(0, min(k, m) * n))
        blocks.append(random_complex(rng, (m * n, r)) @ random_complex(rng, (r, k * n)))
    return AdjointableOp(ModuleSpace(sh, k), ModuleSpace(sh, m), blocks)


def _corpus_operator(rng) -> AdjointableOp:
    """Dense random operator; a third are rank deficient by construction."""
    shape = _pick(rng, CORPUS_SHAPES)
    k, m = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    if rng.uniform() < 1 / 3:
        return _low_rank(rng, shape, m, k)
    return random_operator(rng, shape, k, m)


def _vector(rng, space: ModuleSpace) -> ModuleVector:
    return ModuleVector(space, [random_complex(rng, (space.rank * n, n)) for n in space.shape.block_sizes])


# -- core -------------------------------------------------------------------

def _cstar_identity(rng):
    a = _element(rng, _shape(rng))
    na = alg_norm(a)
    return abs(alg_norm(a.H @ a) - na**2) / na**2


def _adjoint_antimultiplicative(rng):
    shape = _shape(rng)
    a, b = _element(rng, shape), _element(rng, shape)
    return alg_norm((a @ b).H - b.H @ a.H) / (alg_norm(a) * alg_norm(b))


def _commutant_preserved(rng):
    h = _hermitian(rng, _shape(rng))
    c = random_complex(rng, 3)
    b = AlgebraElement(h.shape, [c[0] * np.eye(len(x)) + c[1] * x + c[2] * x @ x for x in h.blocks])
    fh = functional_calculus(h, np.exp)
    return max(_rel_comm(x, y) for x, y in zip(fh.blocks, b.blocks))


def _power_commutant(rng):
    d = int(rng.integers(1, 6))
    t, s = _commuting_pair(rng, d)
    alpha = _pick(rng, ALPHAS)
    ta = alg_power(AlgebraElement((d,), [t]), alpha).blocks[0]
    return _rel_comm(ta, s)


def _spectral_mapping(rng):
    d = int(rng.integers(1, 6))
    v = random_unitary(rng, d)
    lam = np.sort(rng.uniform(0.5, 2.0, d))
    alpha = _pick(rng, ALPHAS)
    a = AlgebraElement((d,), [(v * lam) @ v.conj().T])
    mu = spectrum(alg_power(a, alpha)).eigenvalues
    return float(np.max(np.abs(mu - lam**alpha) / lam**alpha))


def _gram_positive(rng):
    a = _element(rng, _shape(rng))
    w = spectrum(a.H @ a).eigenvalues
    return max(0.0, -float(w[0])) / alg_norm(a) ** 2


# -- module -----------------------------------------------------------------

def _inner_axioms(rng):
    space = ModuleSpace(_shape(rng), int(rng.integers(1, 4)))
    x, y, z = (_vector(rng, space) for _ in range(3))
    a = _element(rng, space.shape)
    c = complex(*rng.uniform(-1, 1, 2))
    scale = vector_norm(x) * (vector_norm(y) * alg_norm(a) + vector_norm(z)) + 1.0
    lin = alg_norm(inner(x, y.right_mul(a) + c * z) - (inner(x, y) @ a + c * inner(x, z)))
    herm = alg_norm(inner(x, y).H - inner(y, x))
    pos = max(0.0, -float(spectrum(inner(x, x)).eigenvalues[0]))
    cs = max(0.0, alg_norm(inner(x, y)) - vector_norm(x) * vector_norm(y))
    return max(lin, herm, pos, cs) / scale


def _adjoint_pairing(rng):
    t = _corpus_operator(rng)
    x, y = _vector(rng, t.domain), _vector(rng, t.codomain)
    lhs = inner(t @ x, y)
    rhs = inner(x, op_adjoint(t) @ y)
    den = max(op_norm(t), 1e-300) * vector_norm(x) * vector_norm(y)
    return alg_norm(lhs - rhs) / den


def _commutant_projection(rng):
    d = int(rng.integers(2, 6))
    t, s = _commuting_pair(rng, d)
    ts = AdjointableOp.from_scalar_matrix(t)
    ss = AdjointableOp.from_scalar_matrix(s)
    p = range_projection(ts)
    return op_norm(compose(ss, p) - compose(p, ss)) / op_norm(ss)


def _well_conditioned(rng, shape, k: int, m: int) -> AdjointableOp:
    """Injective ``A^k -> A^m`` (``m >= k``) with singular values in ``[0.5, 2]``."""
    sh = AlgebraShape(shape)
    blocks = []
    for n in sh.block_sizes:
        w = random_unitary(rng, m * n)[:, :k * n]
        v = random_unitary(rng, k * n)
        blocks.append((w * rng.uniform(0.5, 2.0, k * n)) @ v.conj().T)
    return AdjointableOp(ModuleSpace(sh, k), ModuleSpace(sh, m), blocks)


def _range_right_invertible(rng):
    """``R(B) = R(C)`` for ``C = BG``, ``G`` invertible, so ``R(AB) = R(AC)``.

    ``A`` and ``G`` are well conditioned: if ``‖AB‖ << ‖A‖‖B‖`` rounding
    noise in the products reaches the rank cutoff and the numerical ranks of
    ``AB`` and ``AC`` are no longer determined.
    """
    shape = _pick(rng, CORPUS_SHAPES)
    k = int(rng.integers(1, 4))
    m = int(rng.integers(k, 4))
    a = _well_conditioned(rng, shape, k, m)
    b = _low_rank(rng, shape, k, k)
    g = _well_conditioned(rng, shape, k, k)
    c = compose(b, g)
    return op_norm(range_projection(compose(a, b)) - range_projection(compose(a, c)))


def _gram_ranges(rng):
    t = _corpus_operator(rng)
    ts = op_adjoint(t)
    return max(
        op_norm(range_projection(compose(ts, t)) - range_projection(ts)),
        op_norm(range_projection(compose(t, ts)) - range_projection(t)),
    )


def _resolvent_bounds(rng):
    t = _corpus_operator(rng)
    p = compose(op_adjoint(t), t)
    n = int(rng.integers(1, 1000))
    tn = iterate_T_n(p, n)
    return max(0.0, op_norm(tn) - 1.0, op_norm(compose(tn, p) - p) - 1.0 / n)


def _resolvable(p: AdjointableOp, alpha: float) -> bool:
    """Whether the range of ``p**alpha`` is numerically determined to RANGE_TOL.

    The eigenvector of the least positive eigenvalue moves by about
    ``eps·κ^α`` under rounding, where ``κ`` is the positive condition number.
    """
    for b in p.blocks:
        w = np.linalg.eigvalsh(b)
        top = w[-1]
        pos = w[w > b.shape[0] * np.finfo(float).eps * top]
        if pos.size and np.finfo(float).eps * (top / pos[0]) ** max(alpha, 1.0) > 1e-9:
            return False
    return True


def _closure_range_power(rng):
    t = _corpus_operator(rng)
    p = compose(op_adjoint(t), t)
    alpha = _pick(rng, ALPHAS)
    if not _resolvable(p, alpha):
        return None
    return _flag(closure_range_power_check(p, alpha))


# -- polar ------------------------------------------------------------------

def _polar_contract(rng):
    t = _corpus_operator(rng)
    r = verify_polar_identities(t, polar_decompose(t))
    return max(r.residuals[k] for k in ("factorization", "initial_projection", "final_projection"))


def _polar_identities(rng):
    t = _corpus_operator(rng)
    return verify_polar_identities(t, polar_decompose(t)).max_residual


def _polar_alpha(rng):
    t = _corpus_operator(rng)
    return alpha_intertwine_check(polar_decompose(t), _pick(rng, ALPHAS)).max_residual


def _existence_unanimous(rng):
    r = check_existence_conditions(_corpus_operator(rng))
    return _flag(all(r.conditions))


def _uniqueness(rng):
    t = _corpus_operator(rng)
    try:
        v = polar_decompose_via_limit(t).U
    except IllConditioned:
        return None
    return op_norm(polar_decompose(t).U - v)


def _adjoint_duality(rng):
    t = _corpus_operator(rng)
    f, g = polar_decompose(t), polar_decompose(op_adjoint(t))
    return max(
        op_norm(g.U - op_adjoint(f.U)),
        op_norm(g.absT - f.absTstar) / max(op_norm(t), 1e-300),
    )


def _isometry_fixed_point(rng):
    u = polar_decompose(_corpus_operator(rng)).U
    f = polar_decompose(u)
    return max(op_norm(f.U - u), op_norm(f.absT - compose(op_adjoint(u), u)))


def _criterion_accepts_canonical(rng):
    t = _corpus_operator(rng)
    return _flag(criterion_check(t, polar_decompose(t).U))


# -- centered ---------------------------------------------------------------

CENTERED_ORDER = 8


def _labeled(rng):
    return corpus(int(rng.integers(2**63)), 1)[0]


def _verdict(t, tol):
    try:
        return centered_report(t, CENTERED_ORDER, tol).centered
    except EquivalenceViolation:
        return None


def _centered_unanimity(rng, tol):
    return _flag(_verdict(_labeled(rng).op, tol) is not None)


def _centered_labels(rng, tol):
    item = _labeled(rng)
    v = _verdict(item.op, tol)
    if item.label == CENTERED:
        return _flag(v is True)
    if item.label == NOT_CENTERED:
        return _flag(v is False)
    return None


def _centered_adjoint(rng, tol):
    t = _labeled(rng).op
    return _flag(_verdict(t, tol) == _verdict(op_adjoint(t), tol))


def _centered_conjugation(rng, tol):
    t = _labeled(rng).op
    w = AdjointableOp.from_scalar_matrix(random_unitary(rng, t.domain.rank), t.shape)
    return _flag(_verdict(t, tol) == _verdict(compose(compose(w, t), op_adjoint(w)), tol))


def _shift(rng, rank):
    spec = GeneratorSpec(Kind.WeightedShift, rank, _pick(rng, CORPUS_SHAPES), seed=int(rng.integers(2**63)))
    return generate(spec)


def _product_formula(rng, tol):
    tab = PowerTables(polar_decompose(_shift(rng, int(rng.integers(2, 7)))))
    r = product_formula_check(tab, int(rng.integers(1, 6)), tol)
    return r.residual if r.applicable else None


def _cancellation(rng, tol):
    item = _labeled(rng)
    if item.label != CENTERED:
        return None
    r = cancellation_check(PowerTables(polar_decompose(item.op)), int(rng.integers(1, 6)), tol)
    return r.residual if r.applicable else None


def _propagation(rng, tol):
    tab = PowerTables(polar_decompose(_labeled(rng).op))
    reports = [lemma42_propagation(tab, n, tol) for n in range(1, 7)]
    applicable = [r for r in reports if r.applicable]
    if not applicable:
        return None
    return _flag(all(r.consistent for r in applicable))


def _with_tol(fn, tol):
    return lambda rng: fn(rng, tol)


def suite_invariants(name: str, tol: float) -> list[Invariant]:
    if name == "core":
        return [
            Invariant("core.cstar_identity", _cstar_identity, 1e-10),
            Invariant("core.adjoint_antimultiplicative", _adjoint_antimultiplicative, 1e-12),
            Invariant("core.commutant_preserved", _commutant_preserved, 1e-10),
            Invariant("core.power_commutant", _power_commutant, 1e-10),
            Invariant("core.spectral_mapping", _spectral_mapping, 1e-12),
            Invariant("core.gram_positive", _gram_positive, 1e-12),
        ]
    if name == "module":
        return [
            Invariant("module.inner_axioms", _inner_axioms, 1e-10),
            Invariant("module.adjoint_pairing", _adjoint_pairing, 1e-10),
            Invariant("module.commutant_projection", _commutant_projection, tol),
            Invariant("module.range_right_invertible", _range_right_invertible, tol),
            Invariant("module.gram_ranges", _gram_ranges, tol),
            Invariant("module.resolvent_bounds", _resolvent_bounds, 1e-12),
            Invariant("module.closure_range_power", _closure_range_power, 0.0),
        ]
    if name == "polar":
        return [
            Invariant("polar.contract", _polar_contract, tol),
            Invariant("polar.identities", _polar_identities, tol),
            Invariant("polar.alpha_identities", _polar_alpha, tol),
            Invariant("polar.existence_unanimous", _existence_unanimous, 0.0),
            Invariant("polar.uniqueness_limit_path", _uniqueness, 1e-6),
            Invariant("polar.adjoint_duality", _adjoint_duality, tol),
            Invariant("polar.isometry_fixed_point", _isometry_fixed_point, tol),
            Invariant("polar.criterion_accepts_canonical", _criterion_accepts_canonical, 0.0),
        ]
    if name == "centered":
        return [
            Invariant("centered.unanimity", _with_tol(_centered_unanimity, tol), 0.0),
            Invariant("centered.labels", _with_tol(_centered_labels, tol), 0.0),
            Invariant("centered.adjoint_stable", _with_tol(_centered_adjoint, tol), 0.0),
            Invariant("centered.unitary_conjugation_stable", _with_tol(_centered_conjugation, tol), 0.0),
            Invariant("centered.product_formula", _with_tol(_product_formula, tol), tol),
            Invariant("centered.cancellation", _with_tol(_cancellation, tol), tol),
            Invariant("centered.propagation_consistent", _with_tol(_propagation, tol), 0.0),
        ]
    raise KeyError(name)


def run_invariant(inv: Invariant, seed: np.random.SeedSequence, trials: int) -> dict:
    rng = np.random.Generator(np.random.Philox(seed))
    worst, violations, skipped = 0.0, 0, 0
    for _ in range(trials):
        r = inv.check(rng)
        if r is None:
            skipped += 1
            continue
        r = float(r)
        if not r <= inv.tol:  # NaN counts as a violation
            violations += 1
        worst = r if np.isnan(r) else max(worst, r)
    return {
        "max_residual": worst,
        "tolerance": inv.tol,
        "trials": trials,
        "skipped": skipped,
        "violations": violations,
    }


def run_suites(names: list[str], seed: int, trials: int, tol: float) -> dict:
    """Run the named suites and return a JSON-ready summary.

    Each invariant is seeded by ``(seed, suite index, invariant index)`` so
    the summary depends only on the arguments.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    invariants = {}
    total = 0
    for name in names:
        s_idx = SUITES.index(name)
        for i_idx, inv in enumerate(suite_invariants(name, tol)):
            res = run_invariant(inv, np.random.SeedSequence([seed, s_idx, i_idx]), trials)
            invariants[inv.name] = res
            total += res["violations"]
    return {
        "suites": list(names),
        "seed": seed,
        "trials": trials,
        "tolerance": tol,
        "invariants": invariants,
        "violations": total,
    }
