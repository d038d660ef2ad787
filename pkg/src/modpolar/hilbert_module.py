"""The free Hilbert module ``A^k`` over ``A = ⊕ M_{n_i}(C)`` and its operators.

An adjointable map ``A^k -> A^m`` is an ``m x k`` matrix over ``A`` acting by
left multiplication. Because ``A`` splits into summands, such a matrix is
stored as one complex ``(m·n_i) x (k·n_i)`` matrix per summand; entry
``(r, c)`` restricted to summand ``i`` is the ``n_i x n_i`` tile at block row
``r``, block column ``c``. Adjoint, composition and norm are all computed on
these flattened matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from numbers import Number
from typing import NamedTuple, Sequence

import numpy as np

from .cstar_core import (
    HERMITIAN_TOL,
    POS_TOL,
    AlgebraElement,
    AlgebraShape,
    hermitian_defect,
    hermitian_power,
    hermitize,
    matrix_norm,
)
from .errors import NoConvergence, NotPositive, ShapeMismatch

EPS = np.finfo(np.float64).eps
PROJECTION_TOL = 1e-10
RANGE_TOL = 1e-8
N_CAP = 10**6


@dataclass(frozen=True)
class ModuleSpace:
    """The free module ``A^rank``."""

    shape: AlgebraShape
    rank: int

    def __post_init__(self):
        if not isinstance(self.shape, AlgebraShape):
            object.__setattr__(self, "shape", AlgebraShape(tuple(self.shape)))
        if int(self.rank) < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        object.__setattr__(self, "rank", int(self.rank))

    def flat_dims(self) -> tuple[int, ...]:
        return tuple(self.rank * n for n in self.shape.block_sizes)


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


class ModuleVector:
    """Element of ``A^k``: a k-tuple of algebra elements.

    Stored per summand as a ``(k·n_i) x n_i`` column stack.
    """

    __slots__ = ("space", "stacks")

    def __init__(self, space: ModuleSpace, stacks: Sequence):
        self.space = space
        if len(stacks) != len(space.shape.block_sizes):
            raise ShapeMismatch("one stack per summand required")
        out = []
        for n, s in zip(space.shape.block_sizes, stacks):
            s = _readonly(s)
            if s.shape != (space.rank * n, n):
                raise ShapeMismatch(f"stack {s.shape} does not fit rank {space.rank}, block {n}")
            out.append(s)
        self.stacks = tuple(out)

    @classmethod
    def from_entries(cls, entries: Sequence[AlgebraElement]) -> "ModuleVector":
        if not entries:
            raise ShapeMismatch("a module vector needs at least one entry")
        shape = entries[0].shape
        for e in entries:
            if e.shape != shape:
                raise ShapeMismatch("entries live in different algebras")
        stacks = [np.vstack([e.blocks[i] for e in entries]) for i in range(len(shape))]
        return cls(ModuleSpace(shape, len(entries)), stacks)

    @classmethod
    def zero(cls, space: ModuleSpace) -> "ModuleVector":
        return cls(space, [np.zeros((space.rank * n, n)) for n in space.shape.block_sizes])

    @property
    def entries(self) -> tuple[AlgebraElement, ...]:
        shape = self.space.shape
        return tuple(
            AlgebraElement(
                shape, [s[j * n:(j + 1) * n, :] for n, s in zip(shape.block_sizes, self.stacks)]
            )
            for j in range(self.space.rank)
        )

    def right_mul(self, a: AlgebraElement) -> "ModuleVector":
        """Module action ``x·a``."""
        if a.shape != self.space.shape:
            raise ShapeMismatch("algebra mismatch in module action")
        return ModuleVector(self.space, [s @ b for s, b in zip(self.stacks, a.blocks)])

    def __add__(self, other: "ModuleVector") -> "ModuleVector":
        _same_space(self.space, other.space)
        return ModuleVector(self.space, [a + b for a, b in zip(self.stacks, other.stacks)])

    def __sub__(self, other: "ModuleVector") -> "ModuleVector":
        _same_space(self.space, other.space)
        return ModuleVector(self.space, [a - b for a, b in zip(self.stacks, other.stacks)])

    def __rmul__(self, c):
        if isinstance(c, Number):
            return ModuleVector(self.space, [c * s for s in self.stacks])
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, ModuleVector):
            return NotImplemented
        return self.space == other.space and all(
            np.array_equal(a, b) for a, b in zip(self.stacks, other.stacks)
        )

    __hash__ = None

    def __repr__(self):
        return f"ModuleVector(rank={self.space.rank}, shape={list(self.space.shape.block_sizes)})"


def _same_space(a: ModuleSpace, b: ModuleSpace) -> None:
    if a != b:
        raise ShapeMismatch(f"module spaces differ: {a} vs {b}")


def inner(x: ModuleVector, y: ModuleVector) -> AlgebraElement:
    """``<x, y> = sum_j x_j* y_j``, conjugate-linear in ``x``."""
    _same_space(x.space, y.space)
    return AlgebraElement(x.space.shape, [a.conj().T @ b for a, b in zip(x.stacks, y.stacks)])


def vector_norm(x: ModuleVector) -> float:
    """``sqrt(‖<x, x>‖)``."""
    return max(matrix_norm(s) for s in x.stacks)


class AdjointableOp:
    """An ``m x k`` matrix over ``A`` mapping ``A^k`` to ``A^m``.

    ``blocks[i]`` is the flattened ``(m·n_i) x (k·n_i)`` complex matrix of
    summand ``i``.
    """

    __slots__ = ("domain", "codomain", "blocks")

    def __init__(self, domain: ModuleSpace, codomain: ModuleSpace, blocks: Sequence):
        if domain.shape != codomain.shape:
            raise ShapeMismatch("domain and codomain must share the algebra")
        if len(blocks) != len(domain.shape.block_sizes):
            raise ShapeMismatch("one flattened block per summand required")
        out = []
        for n, b in zip(domain.shape.block_sizes, blocks):
            b = _readonly(b)
            if b.shape != (codomain.rank * n, domain.rank * n):
                raise ShapeMismatch(
                    f"block {b.shape} does not fit {codomain.rank}x{domain.rank} over M_{n}"
                )
            out.append(b)
        self.domain = domain
        self.codomain = codomain
        self.blocks = tuple(out)

    @property
    def shape(self) -> AlgebraShape:
        return self.domain.shape

    @property
    def is_square(self) -> bool:
        return self.domain == self.codomain

    @classmethod
    def from_entries(cls, entries: Sequence[Sequence[AlgebraElement]]) -> "AdjointableOp":
        m, k = len(entries), len(entries[0])
        shape = entries[0][0].shape
        blocks = [
            np.block([[entries[r][c].blocks[i] for c in range(k)] for r in range(m)])
            for i in range(len(shape))
        ]
        return cls(ModuleSpace(shape, k), ModuleSpace(shape, m), blocks)

    @classmethod
    def from_scalar_matrix(cls, mat, shape: AlgebraShape | Sequence[int] = (1,)) -> "AdjointableOp":
        """Matrix of complex numbers, each entry acting as a scalar multiple of 1."""
        if not isinstance(shape, AlgebraShape):
            shape = AlgebraShape(tuple(shape))
        mat = np.atleast_2d(np.asarray(mat, dtype=np.complex128))
        m, k = mat.shape
        blocks = [np.kron(mat, np.eye(n)) for n in shape.block_sizes]
        return cls(ModuleSpace(shape, k), ModuleSpace(shape, m), blocks)

    @classmethod
    def identity(cls, space: ModuleSpace) -> "AdjointableOp":
        return cls(space, space, [np.eye(d) for d in space.flat_dims()])

    @classmethod
    def zero(cls, domain: ModuleSpace, codomain: ModuleSpace | None = None) -> "AdjointableOp":
        codomain = codomain or domain
        return cls(
            domain,
            codomain,
            [np.zeros((codomain.rank * n, domain.rank * n)) for n in domain.shape.block_sizes],
        )

    def like(self, blocks, domain=None, codomain=None) -> "AdjointableOp":
        return AdjointableOp(domain or self.domain, codomain or self.codomain, blocks)

    def entry(self, r: int, c: int) -> AlgebraElement:
        return AlgebraElement(
            self.shape,
            [b[r * n:(r + 1) * n, c * n:(c + 1) * n] for n, b in zip(self.shape.block_sizes, self.blocks)],
        )

    @property
    def entries(self) -> list[list[AlgebraElement]]:
        return [[self.entry(r, c) for c in range(self.domain.rank)] for r in range(self.codomain.rank)]

    @property
    def H(self) -> "AdjointableOp":
        return op_adjoint(self)

    def __matmul__(self, other):
        if isinstance(other, AdjointableOp):
            return compose(self, other)
        if isinstance(other, ModuleVector):
            return apply(self, other)
        return NotImplemented

    def __add__(self, other):
        return op_add(self, other)

    def __sub__(self, other):
        return op_add(self, op_scale(other, -1.0))

    def __neg__(self):
        return op_scale(self, -1.0)

    def __mul__(self, c):
        if isinstance(c, Number):
            return op_scale(self, c)
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, p: int):
        return op_power(self, p)

    def __eq__(self, other):
        if not isinstance(other, AdjointableOp):
            return NotImplemented
        return (
            self.domain == other.domain
            and self.codomain == other.codomain
            and all(np.array_equal(a, b) for a, b in zip(self.blocks, other.blocks))
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"AdjointableOp({self.codomain.rank}x{self.domain.rank} over "
            f"{list(self.shape.block_sizes)})"
        )


class Projection(AdjointableOp):
    """Orthogonal projection on ``A^k``: ``P = P² = P*`` to tolerance."""

    __slots__ = ()


def apply(t: AdjointableOp, x: ModuleVector) -> ModuleVector:
    _same_space(t.domain, x.space)
    return ModuleVector(t.codomain, [b @ s for b, s in zip(t.blocks, x.stacks)])


def compose(s: AdjointableOp, t: AdjointableOp) -> AdjointableOp:
    """``s ∘ t``."""
    _same_space(s.domain, t.codomain)
    return AdjointableOp(t.domain, s.codomain, [a @ b for a, b in zip(s.blocks, t.blocks)])


def op_adjoint(t: AdjointableOp) -> AdjointableOp:
    return AdjointableOp(t.codomain, t.domain, [b.conj().T for b in t.blocks])


def op_add(s: AdjointableOp, t: AdjointableOp) -> AdjointableOp:
    _same_space(s.domain, t.domain)
    _same_space(s.codomain, t.codomain)
    return s.like([a + b for a, b in zip(s.blocks, t.blocks)])


def op_scale(t: AdjointableOp, c: complex) -> AdjointableOp:
    return t.like([c * b for b in t.blocks])


def op_power(t: AdjointableOp, p: int) -> AdjointableOp:
    if not t.is_square:
        raise ShapeMismatch("powers need a square operator")
    if p < 0:
        raise ValueError("negative powers are not defined")
    return t.like([np.linalg.matrix_power(b, p) for b in t.blocks])


def op_norm(t: AdjointableOp) -> float:
    """Operator norm: largest singular value over the flattened summands."""
    return max(matrix_norm(b) for b in t.blocks)


def flatten(t: AdjointableOp) -> list[np.ndarray]:
    """Per-summand flattened complex matrices (writable copies)."""
    return [np.array(b) for b in t.blocks]


def unflatten(blocks: Sequence, domain: ModuleSpace, codomain: ModuleSpace) -> AdjointableOp:
    return AdjointableOp(domain, codomain, blocks)


def rank_tolerance(sigma: np.ndarray, shape: tuple[int, int]) -> float:
    """Numerical-rank cutoff ``max(rows, cols)·eps·σ_max`` for one matrix."""
    if sigma.size == 0:
        return 0.0
    return max(shape) * EPS * float(sigma[0])


def column_space_basis(m: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the numerical column space of ``m``."""
    if m.size == 0:
        return np.zeros((m.shape[0], 0), dtype=np.complex128)
    w, s, _ = np.linalg.svd(m, full_matrices=False)
    r = int(np.count_nonzero(s > rank_tolerance(s, m.shape)))
    return w[:, :r]


def range_projection(t: AdjointableOp) -> Projection:
    """Projection onto the closure of the range of ``t`` (its column space)."""
    blocks = []
    for b in t.blocks:
        w = column_space_basis(b)
        blocks.append(w @ w.conj().T)
    return Projection(t.codomain, t.codomain, blocks)


def projection_residuals(p: AdjointableOp) -> tuple[float, float]:
    """``(‖P² - P‖, ‖P - P*‖)``."""
    idem = max(matrix_norm(b @ b - b) for b in p.blocks)
    sym = max(matrix_norm(b - b.conj().T) for b in p.blocks)
    return idem, sym


def is_projection(p: AdjointableOp, tol: float = PROJECTION_TOL) -> bool:
    return p.is_square and max(projection_residuals(p)) <= tol


def op_positive(t: AdjointableOp, pos_tol: float = POS_TOL) -> bool:
    if not t.is_square:
        return False
    scale = op_norm(t)
    for b in t.blocks:
        if b.size == 0:
            continue
        if hermitian_defect(b) > HERMITIAN_TOL * scale:
            return False
        if np.linalg.eigvalsh(hermitize(b))[0] < -pos_tol * scale:
            return False
    return True


def _require_positive(t: AdjointableOp) -> None:
    if not op_positive(t):
        raise NotPositive("operator is not positive to tolerance")


def op_power_positive(t: AdjointableOp, alpha: float) -> AdjointableOp:
    """``t**alpha`` for positive ``t`` via spectral calculus on each summand."""
    if not t.is_square:
        raise NotPositive("positive operators are square")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    scale = op_norm(t)
    for b in t.blocks:
        if hermitian_defect(b) > HERMITIAN_TOL * scale:
            raise NotPositive("operator is not self-adjoint")
    return t.like([hermitian_power(b, alpha) for b in t.blocks])


def _resolvent_blocks(t: AdjointableOp, n: int) -> list[np.ndarray]:
    """Flattened blocks of ``T_n = (I/n + T)^{-1} T``, by linear solve."""
    out = []
    for b in t.blocks:
        d = b.shape[0]
        out.append(np.linalg.solve(np.eye(d) / n + b, b) if d else b.copy())
    return out


def iterate_T_n(t: AdjointableOp, n: int) -> AdjointableOp:
    """The operator ``T_n = (I/n + T)^{-1} T`` approximating the range projection.

    Satisfies ``‖T_n‖ <= 1`` and ``‖T_n T - T‖ <= 1/n`` for positive ``T``.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    _require_positive(t)
    return t.like(_resolvent_blocks(t, n))


def iterate_range_projection(t: AdjointableOp, x: ModuleVector, n: int) -> ModuleVector:
    """``T_n x`` for the resolvent approximant ``T_n``."""
    return apply(iterate_T_n(t, n), x)


def basis_probes(space: ModuleSpace) -> list[ModuleVector]:
    """The ``k·sum(n_i²)`` canonical basis vectors of ``A^k``."""
    probes = []
    sizes = space.shape.block_sizes
    for i, n in enumerate(sizes):
        for c in range(space.rank):
            for a in range(n):
                for b in range(n):
                    stacks = [np.zeros((space.rank * m, m)) for m in sizes]
                    stacks[i][c * n + a, b] = 1.0
                    probes.append(ModuleVector(space, stacks))
    return probes


class Convergence(NamedTuple):
    projection: Projection
    n: int
    error: float


def _probe_error(t_n: list[np.ndarray], p: Projection, probes: Sequence[ModuleVector] | None) -> float:
    if probes is None:
        # canonical probes: one nonzero column each, so the module norm is a column norm
        return max(
            (float(np.max(np.linalg.norm(a - b, axis=0))) if a.size else 0.0)
            for a, b in zip(t_n, p.blocks)
        )
    worst = 0.0
    for x in probes:
        for a, b, s in zip(t_n, p.blocks, x.stacks):
            worst = max(worst, matrix_norm((a - b) @ s))
    return worst


def converge_range_projection(
    t: AdjointableOp,
    eps: float,
    probes: Sequence[ModuleVector] | None = None,
    n_cap: int = N_CAP,
) -> Convergence:
    """Smallest ``n`` with ``max_x ‖T_n x - P x‖ < eps`` over the probe set.

    ``P`` is the SVD range projection; ``T_n`` is the resolvent approximant,
    so this cross-checks the two routes. ``n`` runs over powers of two and
    is then bisected. ``probes=None`` uses the canonical basis of the module.

    Raises
    ------
    NoConvergence
        If no ``n <= n_cap`` reaches ``eps``; usually a positive eigenvalue
        far below ``1/n_cap``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    _require_positive(t)
    if probes is not None:
        for x in probes:
            _same_space(t.domain, x.space)
    p = range_projection(t)

    def err(n):
        return _probe_error(_resolvent_blocks(t, n), p, probes)

    lo, hi = 0, 1
    e_hi = err(hi)
    while not e_hi < eps:
        if hi >= n_cap:
            raise NoConvergence(f"no n <= {n_cap} reaches eps={eps:g} (error {e_hi:.3e})")
        lo, hi = hi, min(2 * hi, n_cap)
        e_hi = err(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        e_mid = err(mid)
        if e_mid < eps:
            hi, e_hi = mid, e_mid
        else:
            lo = mid
    return Convergence(p, hi, e_hi)


def projection_distance(p: AdjointableOp, q: AdjointableOp) -> float:
    return op_norm(p - q)


def closure_range_power_check(t: AdjointableOp, alpha: float, tol: float = RANGE_TOL) -> bool:
    """Whether ``T**alpha`` and ``T`` have the same closed range."""
    t_alpha = op_power_positive(t, alpha)
    return projection_distance(range_projection(t_alpha), range_projection(t)) <= tol
