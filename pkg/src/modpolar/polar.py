"""Polar decomposition ``T = U|T|`` of adjointable operators and its checks.

The factors are built from one SVD per summand of the flattened operator.
An independent construction through ``U_ε = T (T*T + εI)^{-1/2}`` with
Richardson extrapolation in ``ε`` is provided to cross-check uniqueness.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cstar_core import hermitize
from .errors import (
    EquivalenceViolation,
    IllConditioned,
    NonPositiveAlpha,
    NotPartialIsometry,
    ShapeMismatch,
)
from .hilbert_module import (
    EPS,
    AdjointableOp,
    Projection,
    compose,
    op_adjoint,
    op_norm,
    op_power_positive,
    projection_residuals,
    range_projection,
    rank_tolerance,
)

TOL = 1e-8
LIMIT_TOL = 1e-6
# eigenvalues of T*T closer than this factor to the eigenvalue noise floor
# cannot be resolved to LIMIT_TOL by the limit construction
LIMIT_GATE = 1e8


@dataclass(frozen=True)
class PolarFactors:
    """``U``, ``|T|``, ``|T*|`` and the projections onto ``cl R(T*)`` and ``cl R(T)``."""

    U: AdjointableOp
    absT: AdjointableOp
    absTstar: AdjointableOp
    P_rstar: Projection
    P_r: Projection


def _rel(residual: float, scale: float) -> float:
    return residual / scale if scale > 0 else residual


def _svd_parts(b: np.ndarray):
    w, s, vh = np.linalg.svd(b, full_matrices=False)
    r = int(np.count_nonzero(s > rank_tolerance(s, b.shape)))
    return w, s, vh.conj().T, r


def abs_op(t: AdjointableOp) -> AdjointableOp:
    """``|T| = (T*T)^{1/2}``.

    Taken from the right singular vectors, ``V_r Σ_r V_r*``, which is the
    square root of ``T*T`` without squaring the condition number. Singular
    values below the rank cutoff are dropped, so ``|T|`` has exactly the
    numerical rank that ``U`` and the range projections use; otherwise
    ``|T|**0.5`` would turn a 1e-16 remnant into 1e-8.
    """
    blocks = []
    for b in t.blocks:
        _, s, v, r = _svd_parts(b)
        vr = v[:, :r]
        blocks.append((vr * s[:r]) @ vr.conj().T)
    return AdjointableOp(t.domain, t.domain, blocks)


def polar_decompose(t: AdjointableOp) -> PolarFactors:
    """Canonical polar decomposition: ``T = U|T|`` with ``U*U = P_{cl R(T*)}``.

    Per summand ``T = W Σ V*`` and ``U = W_r V_r*`` over the singular values
    above the rank cutoff, and ``|T| = V_r Σ_r V_r*``, ``|T*| = W_r Σ_r W_r*``.
    ``W_r V_r* = T |T|^+`` is independent of the choice
    of singular bases, so repeated singular values need no special care.
    ``T = 0`` gives ``U = 0``.
    """
    u, a, a_star, p_rs, p_r = [], [], [], [], []
    for b in t.blocks:
        w, s, v, r = _svd_parts(b)
        wr, vr = w[:, :r], v[:, :r]
        u.append(wr @ vr.conj().T)
        a.append((vr * s[:r]) @ vr.conj().T)
        a_star.append((wr * s[:r]) @ wr.conj().T)
        p_rs.append(vr @ vr.conj().T)
        p_r.append(wr @ wr.conj().T)
    dom, cod = t.domain, t.codomain
    return PolarFactors(
        U=AdjointableOp(dom, cod, u),
        absT=AdjointableOp(dom, dom, a),
        absTstar=AdjointableOp(cod, cod, a_star),
        P_rstar=Projection(dom, dom, p_rs),
        P_r=Projection(cod, cod, p_r),
    )


def _neville_at_zero(xs: np.ndarray, ys: list[np.ndarray]) -> np.ndarray:
    """Value at 0 of the interpolating polynomial through ``(xs[j], ys[j])``."""
    table = list(ys)
    n = len(xs)
    for level in range(1, n):
        for j in range(n - level):
            x0, x1 = xs[j], xs[j + level]
            table[j] = (x1 * table[j] - x0 * table[j + 1]) / (x1 - x0)
    return table[0]


def polar_decompose_via_limit(
    t: AdjointableOp,
    eps_schedule: np.ndarray | None = None,
    levels: int = 6,
) -> PolarFactors:
    """Polar decomposition from ``U = lim_{ε→0} T (T*T + εI)^{-1/2}``.

    Uses only an eigendecomposition of ``T*T`` (no SVD of ``T``) and Neville
    extrapolation of ``U_ε`` to ``ε = 0``. The default schedule is
    ``ε_j = 10^{-2} λ_min 2^{-j}`` with ``λ_min`` the least resolved positive
    eigenvalue of ``T*T`` in each summand.

    Raises
    ------
    IllConditioned
        If an eigenvalue of ``T*T`` sits too close to the rounding floor to
        be classified as zero or nonzero; ``U_ε`` jumps across rank changes.
    """
    u = []
    for b in t.blocks:
        if b.size == 0:
            u.append(np.zeros(b.shape))
            continue
        lam, v = np.linalg.eigh(hermitize(b.conj().T @ b))
        floor = max(b.shape) * EPS * max(float(lam[-1]), 0.0)
        ambiguous = (lam > floor) & (lam < LIMIT_GATE * floor)
        if np.any(ambiguous):
            raise IllConditioned(
                f"eigenvalue {lam[ambiguous][0]:.3e} of T*T within {LIMIT_GATE:g}x of the floor {floor:.3e}"
            )
        keep = lam > floor
        if not np.any(keep):
            u.append(np.zeros(b.shape))
            continue
        lam_k, v_k = lam[keep], v[:, keep]
        if eps_schedule is None:
            sched = 1e-2 * float(lam_k.min()) * 2.0 ** -np.arange(levels)
        else:
            sched = np.asarray(eps_schedule, dtype=float)
        tv = b @ v_k
        approx = [(tv * (lam_k + e) ** -0.5) @ v_k.conj().T for e in sched]
        u.append(_neville_at_zero(sched, approx))
    u_op = AdjointableOp(t.domain, t.codomain, u)
    absT = _limit_abs(t)
    absTstar = _limit_abs(op_adjoint(t))
    p_rs = compose(op_adjoint(u_op), u_op)
    p_r = compose(u_op, op_adjoint(u_op))
    return PolarFactors(
        U=u_op,
        absT=absT,
        absTstar=absTstar,
        P_rstar=Projection(t.domain, t.domain, p_rs.blocks),
        P_r=Projection(t.codomain, t.codomain, p_r.blocks),
    )


def _limit_abs(t: AdjointableOp) -> AdjointableOp:
    gram = compose(op_adjoint(t), t)
    return op_power_positive(gram, 0.5)


@dataclass(frozen=True)
class IsometryCheck:
    ok: bool
    idempotency: float
    self_adjointness: float
    reconstruction: float

    def __bool__(self):
        return self.ok


def verify_partial_isometry(u: AdjointableOp, tol: float = TOL) -> IsometryCheck:
    """Whether ``U*U`` is a projection; also reports ``‖UU*U - U‖``."""
    q = compose(op_adjoint(u), u)
    idem, sym = projection_residuals(q)
    recon = op_norm(compose(u, q) - u)
    return IsometryCheck(idem <= tol and sym <= tol, idem, sym, recon)


@dataclass
class Report:
    """Named residuals checked against one tolerance."""

    tol: float
    residuals: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> dict[str, bool]:
        return {k: v <= self.tol for k, v in self.residuals.items()}

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    @property
    def failures(self) -> list[str]:
        return [k for k, ok in self.passed.items() if not ok]

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def __bool__(self):
        return self.ok


def verify_polar_identities(t: AdjointableOp, f: PolarFactors, tol: float = TOL) -> Report:
    """Residuals of every identity the polar factors must satisfy.

    Operator identities are relative to ``‖T‖``; projection equalities, which
    encode the null-space and range equalities, are absolute.
    """
    scale = op_norm(t)
    u, us = f.U, op_adjoint(f.U)
    res = {
        "factorization": _rel(op_norm(compose(u, f.absT) - t), scale),
        "initial_projection": op_norm(compose(us, u) - f.P_rstar),
        "final_projection": op_norm(compose(u, us) - f.P_r),
        "abs_star_conjugation": _rel(op_norm(compose(compose(u, f.absT), us) - f.absTstar), scale),
        "intertwining": _rel(op_norm(compose(u, f.absT) - compose(f.absTstar, u)), scale),
        "adjoint_factorization": _rel(op_norm(op_adjoint(t) - compose(us, f.absTstar)), scale),
        "partial_isometry": op_norm(compose(u, compose(us, u)) - u),
    }
    return Report(tol, res)


@dataclass(frozen=True)
class ExistenceReport:
    """Three existence conditions for a polar decomposition and their residuals."""

    projections_exist: bool
    polar_equations: bool
    range_equalities: bool
    residuals: dict[str, float]

    @property
    def conditions(self) -> tuple[bool, bool, bool]:
        return (self.projections_exist, self.polar_equations, self.range_equalities)

    @property
    def unanimous(self) -> bool:
        return len(set(self.conditions)) == 1


def check_existence_conditions(t: AdjointableOp, tol: float = TOL) -> ExistenceReport:
    """Evaluate the three equivalent existence conditions.

    (i) the range projections of ``T`` and ``T*`` are genuine projections;
    (ii) the constructed ``U`` satisfies ``T = U|T|`` and ``U*U = P_{cl R(T*)}``;
    (iii) ``R(|T|) = R(T*)`` and ``R(|T*|) = R(T)``, compared as projections.
    In finite dimension all three hold; disagreement is a defect.
    """
    p_r = range_projection(t)
    p_rs = range_projection(op_adjoint(t))
    proj_res = max(*projection_residuals(p_r), *projection_residuals(p_rs))

    f = polar_decompose(t)
    scale = op_norm(t)
    fact = _rel(op_norm(compose(f.U, f.absT) - t), scale)
    init = op_norm(compose(op_adjoint(f.U), f.U) - p_rs)
    pi = verify_partial_isometry(f.U, tol)

    r_abs = op_norm(range_projection(f.absT) - p_rs)
    r_abs_star = op_norm(range_projection(f.absTstar) - p_r)

    residuals = {
        "projection_defect": proj_res,
        "factorization": fact,
        "initial_projection": init,
        "range_abs_vs_adjoint": r_abs,
        "range_abs_star_vs_range": r_abs_star,
    }
    return ExistenceReport(
        projections_exist=proj_res <= tol,
        polar_equations=bool(pi) and fact <= tol and init <= tol,
        range_equalities=r_abs <= tol and r_abs_star <= tol,
        residuals=residuals,
    )


def alpha_intertwine_check(f: PolarFactors, alpha: float, tol: float = TOL) -> Report:
    """Residuals of the power identities for ``|T|**alpha`` and ``|T*|**alpha``.

    (i) ``U|T|^α U* = |T*|^α``; (ii) ``U|T|^α = |T*|^α U``;
    (iii) ``U*|T*|^α U = |T|^α``. Relative to ``‖T‖^α``.
    """
    if not alpha > 0:
        raise NonPositiveAlpha(f"alpha must be positive, got {alpha}")
    a = op_power_positive(f.absT, alpha)
    b = op_power_positive(f.absTstar, alpha)
    u, us = f.U, op_adjoint(f.U)
    scale = op_norm(f.absT) ** alpha
    res = {
        "conjugation": _rel(op_norm(compose(compose(u, a), us) - b), scale),
        "intertwining": _rel(op_norm(compose(u, a) - compose(b, u)), scale),
        "reverse_conjugation": _rel(op_norm(compose(compose(us, b), u) - a), scale),
    }
    return Report(tol, res)


def uniqueness_check(t: AdjointableOp, u: AdjointableOp, v: AdjointableOp, tol: float = LIMIT_TOL) -> Report:
    """Check two candidates against the uniqueness hypotheses and each other.

    Reports ``‖U|T| - V|T|‖`` (relative), ``‖U*U - V*V‖``, and the conclusion
    ``‖U - V‖``.
    """
    a = abs_op(t)
    res = {
        "same_action": _rel(op_norm(compose(u, a) - compose(v, a)), op_norm(t)),
        "same_initial_projection": op_norm(
            compose(op_adjoint(u), u) - compose(op_adjoint(v), v)
        ),
        "difference": op_norm(u - v),
    }
    return Report(tol, res)


def criterion_check(t: AdjointableOp, w: AdjointableOp, tol: float = TOL) -> bool:
    """Whether partial isometry ``W`` gives the polar decomposition of ``T``.

    True iff ``T = W|T|`` and ``N(T) ⊆ N(W)``, the latter tested as
    ``‖W (I - P_{cl R(T*)})‖ <= tol``. A positive answer is confirmed
    against the canonical ``U``.

    Raises
    ------
    NotPartialIsometry
        If ``W*W`` is not a projection.
    EquivalenceViolation
        If the criterion holds but ``W`` differs from the canonical factor.
    """
    if w.domain != t.domain or w.codomain != t.codomain:
        raise ShapeMismatch("W must map between the same modules as T")
    if not verify_partial_isometry(w, tol):
        raise NotPartialIsometry("W*W is not a projection")
    f = polar_decompose(t)
    acts = _rel(op_norm(compose(w, f.absT) - t), op_norm(t))
    leak = op_norm(w - compose(w, f.P_rstar))
    if acts > tol or leak > tol:
        return False
    gap = op_norm(w - f.U)
    if gap > tol:
        raise EquivalenceViolation(f"criterion holds but ‖W - U‖ = {gap:.3e}")
    return True
