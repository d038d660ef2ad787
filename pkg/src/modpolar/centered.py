"""Detection of centered operators through a battery of equivalent conditions.

``T`` is centered when the two-sided sequence ``T^n (T^n)*``, ``(T^n)* T^n``
consists of mutually commuting operators. With ``T = U|T|`` this is
equivalent to a number of commutation conditions on the conjugates
``U^m|T|(U^m)*``, ``(U^m)*|T*|U^m`` and the moduli ``|T^n|``, ``|(T^n)*|``.
Each condition quantifies over all powers; here they are truncated at
``n_max`` and evaluated with one shared tolerance.

Commutator residuals are relative: ``‖[A, B]‖ / (‖A‖·‖B‖)``. Operand norms
are floored at ``SCALE_FLOOR`` times their a-priori size (``‖T‖`` for a
conjugate of ``|T|``, ``‖T‖^n`` for ``|T^n|``) so that members which vanish
in exact arithmetic, such as ``U^k|T|(U^k)*`` for nilpotent ``U``, do not turn
rounding noise into an O(1) ratio.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .cstar_core import matrix_norm
from .errors import EquivalenceViolation, InvalidSequence, NotSquare, UnknownTag
from .hilbert_module import AdjointableOp, compose, op_adjoint, op_norm
from .polar import PolarFactors, abs_op, polar_decompose

TOL = 1e-8
SCALE_FLOOR = 1e-6
NILPOTENT_TOL = 1e-12
DEFAULT_ORDER = 8

TAGS = ("i", "ii", "iii", "vi", "vii", "viii", "ix", "x", "xi")
REPORT_TAGS = ("i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x", "xi")


@dataclass(frozen=True)
class Member:
    """A family member together with its a-priori norm bound."""

    op: AdjointableOp
    bound: float

    @cached_property
    def scale(self) -> float:
        return max(op_norm(self.op), SCALE_FLOOR * self.bound)


def max_relative_commutator(
    left: Sequence[Member], right: Sequence[Member] | None = None
) -> float:
    """Largest ``‖[A, B]‖₂ / (scale_A·scale_B)`` over the pairs.

    With ``right=None`` all unordered pairs within ``left`` are used.
    Frobenius norms from the kernel bound the spectral norm from above, so
    exact spectral norms are only computed while the Frobenius bound can
    still beat the running maximum.
    """
    if not left or (right is not None and not right):
        return 0.0
    same = right is None
    right = left if same else right
    ls = np.array([m.scale for m in left])
    rs = np.array([m.scale for m in right])
    bound = np.outer(ls, rs)
    candidates = []
    for s in range(len(left[0].op.blocks)):
        a = [m.op.blocks[s] for m in left]
        if a[0].size == 0:
            continue
        if same:
            fro = kernels.self_commutator_fro(a)
            fro = np.triu(fro, 1)
        else:
            fro = kernels.pairwise_commutator_fro(a, [m.op.blocks[s] for m in right])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(fro > 0, fro / bound, 0.0)
        for i, j in zip(*np.nonzero(ratio)):
            candidates.append((ratio[i, j], s, i, j))
    candidates.sort(reverse=True)
    best = 0.0
    for ub, s, i, j in candidates:
        if ub <= best:
            break
        x, y = left[i].op.blocks[s], right[j].op.blocks[s]
        best = max(best, matrix_norm(x @ y - y @ x) / bound[i, j])
    return float(best)


class PowerTables:
    """Lazily computed powers, moduli and conjugates for one polar decomposition."""

    def __init__(self, f: PolarFactors):
        if not f.U.is_square:
            raise NotSquare("centered conditions need T in L(H)")
        self.f = f
        self.T = compose(f.U, f.absT)
        self.norm = op_norm(self.T)
        self.Us = op_adjoint(f.U)
        self._cache: dict = {}

    def _memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def T_pow(self, n: int) -> AdjointableOp:
        if n == 1:
            return self.T
        return self._memo(("T", n), lambda: compose(self.T, self.T_pow(n - 1)))

    def U_pow(self, n: int) -> AdjointableOp:
        if n == 0:
            return AdjointableOp.identity(self.T.domain)
        if n == 1:
            return self.f.U
        return self._memo(("U", n), lambda: compose(self.f.U, self.U_pow(n - 1)))

    def abs_pow(self, n: int) -> Member:
        """``|T^n|``."""
        if n == 1:
            return Member(self.f.absT, self.norm)
        return self._memo(("|T^n|", n), lambda: Member(abs_op(self.T_pow(n)), self.norm**n))

    def abs_pow_star(self, n: int) -> Member:
        """``|(T^n)*|``."""
        if n == 1:
            return Member(self.f.absTstar, self.norm)
        return self._memo(
            ("|T^n*|", n), lambda: Member(abs_op(op_adjoint(self.T_pow(n))), self.norm**n)
        )

    def conj(self, m: int) -> Member:
        """``U^m |T| (U^m)*``."""
        def build():
            um = self.U_pow(m)
            return Member(compose(compose(um, self.f.absT), op_adjoint(um)), self.norm)
        return self._memo(("C", m), build)

    def conj_star(self, m: int) -> Member:
        """``(U^m)* |T*| U^m``."""
        def build():
            um = self.U_pow(m)
            return Member(compose(compose(op_adjoint(um), self.f.absTstar), um), self.norm)
        return self._memo(("D", m), build)

    def back_conj(self, m: int) -> Member:
        """``(U^m)* |T| U^m``."""
        def build():
            um = self.U_pow(m)
            return Member(compose(compose(op_adjoint(um), self.f.absT), um), self.norm)
        return self._memo(("E", m), build)

    def gram_pair(self, n: int) -> tuple[Member, Member]:
        """``T^n (T^n)*`` and ``(T^n)* T^n``."""
        def build():
            tn = self.T_pow(n)
            b = self.norm ** (2 * n)
            return (
                Member(compose(tn, op_adjoint(tn)), b),
                Member(compose(op_adjoint(tn), tn), b),
            )
        return self._memo(("G", n), build)


def _square(t: AdjointableOp) -> None:
    if not t.is_square:
        raise NotSquare(f"operator maps rank {t.domain.rank} to rank {t.codomain.rank}")


def _tables(f: PolarFactors | PowerTables) -> PowerTables:
    return f if isinstance(f, PowerTables) else PowerTables(f)


def _direct_residual(tab: PowerTables, n_max: int) -> float:
    family = [m for n in range(1, n_max + 1) for m in tab.gram_pair(n)]
    return max_relative_commutator(family)


def centered_direct(t: AdjointableOp, n_max: int = DEFAULT_ORDER, tol: float = TOL) -> tuple[bool, float]:
    """Mutual commutativity of ``T^n (T^n)*`` and ``(T^n)* T^n`` for ``n <= n_max``."""
    _square(t)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    res = _direct_residual(PowerTables(polar_decompose(t)), n_max)
    return res <= tol, res


def _family_residual(tab: PowerTables, tag: str, n_max: int) -> float:
    r = range(1, n_max + 1)
    mrc = max_relative_commutator
    if tag == "i":
        return _direct_residual(tab, n_max)
    if tag == "ii":
        return mrc([tab.abs_pow(n) for n in r], [tab.abs_pow_star(m) for m in r])
    if tag == "iii":
        return mrc([tab.abs_pow(n) for n in r], [tab.abs_pow_star(1)])
    if tag == "vi":
        return mrc([tab.conj(m) for m in r], [tab.abs_pow(n) for n in r])
    if tag == "vii":
        return mrc([tab.conj(n) for n in r], [tab.abs_pow(1)])
    if tag == "viii":
        return mrc([tab.abs_pow_star(n) for n in r], [tab.abs_pow(1)])
    if tag == "ix":
        return mrc([tab.conj_star(n) for n in r], [tab.abs_pow_star(1)])
    if tag == "x":
        return mrc([tab.conj_star(m) for m in r], [tab.abs_pow_star(n) for n in r])
    if tag == "xi":
        omega = [tab.abs_pow(1)]
        for j in r:
            omega += [tab.conj(j), tab.back_conj(j)]
        return mrc(omega)
    raise UnknownTag(tag)


def condition_family(
    f: PolarFactors | PowerTables, tag: str, n_max: int = DEFAULT_ORDER, tol: float = TOL
) -> tuple[bool, float]:
    """Evaluate one tagged condition for every index up to ``n_max``.

    Tags: ``ii`` ``[|T^n|, |(T^m)*|]``; ``iii`` ``[|T^n|, |T*|]``;
    ``vi`` ``[U^m|T|(U^m)*, |T^n|]``; ``vii`` ``[U^n|T|(U^n)*, |T|]``;
    ``viii`` ``[|(T^n)*|, |T|]``; ``ix`` ``[(U^n)*|T*|U^n, |T*|]``;
    ``x`` ``[(U^m)*|T*|U^m, |(T^n)*|]``; ``xi`` pairwise commutativity of
    ``|T|, U^j|T|(U^j)*, (U^j)*|T|U^j``; ``i`` the defining family.
    """
    if tag not in TAGS:
        raise UnknownTag(tag)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    tab = _tables(f)
    res = _family_residual(tab, tag, n_max)
    return res <= tol, res


@dataclass(frozen=True)
class RestrictedSequence:
    """A finite sequence with ``t_n in {1, ..., n}``."""

    terms: tuple[int, ...]

    def __post_init__(self):
        terms = tuple(int(t) for t in self.terms)
        for n, t in enumerate(terms, start=1):
            if not 1 <= t <= n:
                raise InvalidSequence(f"t_{n} = {t} is outside 1..{n}")
        object.__setattr__(self, "terms", terms)

    def __len__(self):
        return len(self.terms)

    @classmethod
    def ones(cls, length: int) -> "RestrictedSequence":
        return cls(tuple([1] * length))

    @classmethod
    def identity(cls, length: int) -> "RestrictedSequence":
        return cls(tuple(range(1, length + 1)))

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> "RestrictedSequence":
        return cls(tuple(int(rng.integers(1, n + 1)) for n in range(1, length + 1)))


def _restricted_residual(tab: PowerTables, s: RestrictedSequence) -> float:
    worst = 0.0
    for n, t in enumerate(s.terms, start=1):
        worst = max(worst, max_relative_commutator([tab.conj(t)], [tab.abs_pow(n + 1 - t)]))
    return worst


def restricted_commutativity(
    f: PolarFactors | PowerTables, s: RestrictedSequence | Sequence[int], tol: float = TOL
) -> tuple[bool, float]:
    """Commutativity along ``s``: ``[U^{t_n}|T|(U^{t_n})*, |T^{n+1-t_n}|] = 0``."""
    if not isinstance(s, RestrictedSequence):
        s = RestrictedSequence(tuple(s))
    res = _restricted_residual(_tables(f), s)
    return res <= tol, res


@dataclass(frozen=True)
class PropagationReport:
    """Outcome of the level-``n+2`` propagation check.

    ``applicable`` is False when the lower-level hypothesis fails; then no
    ``A_t``/``B_t`` are computed. ``residuals[t-1]`` is ``‖A_t - B_t‖``
    relative to ``‖|T^t|²‖·‖U^s|T|(U^s)*‖`` with ``s = n + 2 - t``.
    """

    n: int
    applicable: bool
    hypothesis_residual: float
    residuals: tuple[float, ...] = ()
    equal: tuple[bool, ...] = ()

    @property
    def consistent(self) -> bool:
        return len(set(self.equal)) <= 1


def _hypothesis_residual(tab: PowerTables, n: int) -> float:
    """``max [U^k|T|(U^k)*, |T^l|]`` over ``k, l >= 1``, ``k + l <= n + 1``."""
    worst = 0.0
    for k in range(1, n + 1):
        ls = [tab.abs_pow(l) for l in range(1, n + 2 - k)]
        worst = max(worst, max_relative_commutator([tab.conj(k)], ls))
    return worst


def lemma42_propagation(f: PolarFactors | PowerTables, n: int, tol: float = TOL) -> PropagationReport:
    """Check that ``A_t = B_t`` holds for all or for none of ``t = 1..n+1``.

    ``A_t = |T^t|² · U^s|T|(U^s)*`` and ``B_t = U^s|T|(U^s)* · |T^t|²`` with
    ``s + t = n + 2``, under the hypothesis that
    ``[U^k|T|(U^k)*, |T^l|] = 0`` whenever ``k + l <= n + 1``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    tab = _tables(f)
    hyp = _hypothesis_residual(tab, n)
    if hyp > tol:
        return PropagationReport(n, False, hyp)
    residuals, equal = [], []
    for t in range(1, n + 2):
        s = n + 2 - t
        c = tab.conj(s)
        sq = tab.abs_pow(t)
        m2 = compose(sq.op, sq.op)
        a = compose(m2, c.op)
        b = compose(c.op, m2)
        r = op_norm(a - b) / max(sq.scale**2 * c.scale, np.finfo(float).tiny)
        residuals.append(r)
        equal.append(r <= tol)
    return PropagationReport(n, True, hyp, tuple(residuals), tuple(equal))


@dataclass(frozen=True)
class ConditionalCheck:
    """Result of a check guarded by a hypothesis; ``holds`` is None when not applicable."""

    applicable: bool
    holds: bool | None
    residual: float
    hypothesis_residual: float = 0.0

    def __bool__(self):
        return bool(self.holds)


def product_formula_check(f: PolarFactors | PowerTables, k: int, tol: float = TOL) -> ConditionalCheck:
    """``|(T^k)*| = ∏_{j=1..k} U^j|T|(U^j)*`` given ``[U^j|T|(U^j)*, |T|] = 0`` for ``j < k``.

    The residual is relative to ``‖T‖^k``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    tab = _tables(f)
    hyp = max_relative_commutator([tab.conj(j) for j in range(1, k)], [tab.abs_pow(1)])
    if hyp > tol:
        return ConditionalCheck(False, None, float("nan"), hyp)
    prod = tab.conj(1).op
    for j in range(2, k + 1):
        prod = compose(prod, tab.conj(j).op)
    scale = tab.norm**k
    diff = op_norm(tab.abs_pow_star(k).op - prod)
    res = diff / scale if scale > 0 else diff
    return ConditionalCheck(True, res <= tol, res, hyp)


def cancellation_check(f: PolarFactors | PowerTables, n: int, tol: float = TOL) -> ConditionalCheck:
    """``U^s|T|(U^s)* U^t = U^s|T|(U^{s-t})*`` for ``1 <= t <= s <= n + 1``.

    Requires ``[U^k|T|(U^k)*, |T|] = 0`` for ``k <= n``. Residual relative to ``‖T‖``.
    """
    tab = _tables(f)
    hyp = max_relative_commutator([tab.conj(k) for k in range(1, n + 1)], [tab.abs_pow(1)])
    if hyp > tol:
        return ConditionalCheck(False, None, float("nan"), hyp)
    worst = 0.0
    for s in range(1, n + 2):
        left_base = tab.conj(s).op
        us_abs = compose(tab.U_pow(s), tab.f.absT)
        for t in range(1, s + 1):
            lhs = compose(left_base, tab.U_pow(t))
            rhs = compose(us_abs, op_adjoint(tab.U_pow(s - t)))
            worst = max(worst, op_norm(lhs - rhs))
    res = worst / tab.norm if tab.norm > 0 else worst
    return ConditionalCheck(True, res <= tol, res, hyp)


@dataclass
class CenteredReport:
    """Truth value and residual of every evaluated condition up to ``order_bound``.

    ``exactness`` is ``"Exact"`` when ``U^k`` vanished for some ``k <= order_bound``
    (all higher powers then hold trivially) and ``"BoundedOnly"`` otherwise.
    """

    order_bound: int
    condition_results: dict[str, bool]
    residuals: dict[str, float]
    exactness: str
    sequences: list[tuple[int, ...]] = field(default_factory=list)
    tol: float = TOL

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    @property
    def unanimous(self) -> bool:
        return len(set(self.condition_results.values())) <= 1

    @property
    def centered(self) -> bool | None:
        if not self.unanimous:
            return None
        return next(iter(self.condition_results.values()))

    def as_dict(self) -> dict:
        return {
            "order_bound": self.order_bound,
            "centered": self.centered,
            "exactness": self.exactness,
            "tolerance": self.tol,
            "max_residual": self.max_residual,
            "conditions": {
                tag: {"holds": self.condition_results[tag], "residual": self.residuals[tag]}
                for tag in self.condition_results
            },
            "sequences": [list(s) for s in self.sequences],
        }


def sample_sequences(length: int, seed: int = 0) -> list[RestrictedSequence]:
    """All-ones, identity and one seeded random restricted sequence."""
    rng = np.random.default_rng(seed)
    return [
        RestrictedSequence.ones(length),
        RestrictedSequence.identity(length),
        RestrictedSequence.random(length, rng),
    ]


def _exactness(tab: PowerTables, n_max: int) -> str:
    for k in range(1, n_max + 1):
        if op_norm(tab.U_pow(k)) <= NILPOTENT_TOL:
            return "Exact"
    return "BoundedOnly"


def centered_report(
    t: AdjointableOp,
    n_max: int = DEFAULT_ORDER,
    tol: float = TOL,
    seed: int = 0,
    tags: Iterable[str] = TAGS,
) -> CenteredReport:
    """Run the whole battery and insist on a unanimous verdict.

    Besides the tagged families, commutativity is checked along three
    restricted sequences; ``iv`` records that all of them commute and ``v``
    that at least one does.

    Raises
    ------
    NotSquare
        If ``T`` is not an operator on a single module.
    EquivalenceViolation
        If the conditions disagree; the partial report is attached.
    """
    _square(t)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    tab = PowerTables(polar_decompose(t))
    results, residuals = {}, {}
    for tag in tags:
        res = _family_residual(tab, tag, n_max)
        residuals[tag] = res
        results[tag] = res <= tol
    seqs = sample_sequences(n_max, seed)
    seq_res = [_restricted_residual(tab, s) for s in seqs]
    residuals["iv"] = max(seq_res)
    results["iv"] = all(r <= tol for r in seq_res)
    residuals["v"] = min(seq_res)
    results["v"] = any(r <= tol for r in seq_res)
    order = [g for g in REPORT_TAGS if g in results]
    report = CenteredReport(
        order_bound=n_max,
        condition_results={g: results[g] for g in order},
        residuals={g: residuals[g] for g in order},
        exactness=_exactness(tab, n_max),
        sequences=[s.terms for s in seqs],
        tol=tol,
    )
    if not report.unanimous:
        split = {g: v for g, v in report.condition_results.items()}
        raise EquivalenceViolation(f"conditions disagree: {split}", report)
    return report
