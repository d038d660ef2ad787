"""Arithmetic and spectral calculus in a finite-dimensional C*-algebra.

Every finite-dimensional C*-algebra is a direct sum of full matrix algebras
``M_{n_1}(C) + ... + M_{n_r}(C)``.  An element is stored as one square complex
block per summand and all operations act blockwise.
"""
from __future__ import annotations

from dataclasses import dataclass
from numbers import Number
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import NotPositive, NotSelfAdjoint, ShapeMismatch

HERMITIAN_TOL = 1e-10
_EPS = np.finfo(np.float64).eps
POS_TOL = 1e-10


@dataclass(frozen=True)
class AlgebraShape:
    """Block sizes ``(n_1, ..., n_r)`` of ``M_{n_1}(C) + ... + M_{n_r}(C)``."""

    block_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.block_sizes)
        if not sizes:
            raise ValueError("an algebra needs at least one summand")
        if any(n < 1 for n in sizes):
            raise ValueError(f"block sizes must be positive, got {sizes}")
        object.__setattr__(self, "block_sizes", sizes)

    @property
    def dimension(self) -> int:
        """Complex dimension of the algebra, ``sum(n_i**2)``."""
        return sum(n * n for n in self.block_sizes)

    def __len__(self):
        return len(self.block_sizes)

    def __iter__(self):
        return iter(self.block_sizes)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


class AlgebraElement:
    """An element of ``⊕ M_{n_i}(C)``, one complex block per summand.

    Instances are immutable; block arrays are read-only.
    """

    __slots__ = ("shape", "blocks")

    def __init__(self, shape: AlgebraShape | Sequence[int], blocks: Sequence):
        if not isinstance(shape, AlgebraShape):
            shape = AlgebraShape(tuple(shape))
        if len(blocks) != len(shape.block_sizes):
            raise ShapeMismatch(
                f"expected {len(shape.block_sizes)} blocks, got {len(blocks)}"
            )
        frozen = []
        for n, b in zip(shape.block_sizes, blocks):
            b = _frozen(b)
            if b.shape != (n, n):
                raise ShapeMismatch(f"block of shape {b.shape} does not fit size {n}")
            frozen.append(b)
        self.shape = shape
        self.blocks = tuple(frozen)

    @classmethod
    def zero(cls, shape: AlgebraShape) -> "AlgebraElement":
        return cls(shape, [np.zeros((n, n)) for n in shape.block_sizes])

    @classmethod
    def identity(cls, shape: AlgebraShape) -> "AlgebraElement":
        return cls(shape, [np.eye(n) for n in shape.block_sizes])

    @classmethod
    def scalar(cls, shape: AlgebraShape, value: complex) -> "AlgebraElement":
        return cls(shape, [value * np.eye(n) for n in shape.block_sizes])

    def __repr__(self):
        return f"AlgebraElement({list(self.shape.block_sizes)}, {[b.tolist() for b in self.blocks]})"

    def __eq__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self.shape == other.shape and all(
            np.array_equal(a, b) for a, b in zip(self.blocks, other.blocks)
        )

    __hash__ = None

    def __add__(self, other):
        return alg_add(self, other)

    def __sub__(self, other):
        return alg_add(self, alg_scale(other, -1.0))

    def __neg__(self):
        return alg_scale(self, -1.0)

    def __matmul__(self, other):
        return alg_mul(self, other)

    def __mul__(self, other):
        if isinstance(other, Number):
            return alg_scale(self, other)
        return alg_mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return alg_scale(self, other)
        return NotImplemented

    @property
    def H(self) -> "AlgebraElement":
        return alg_adjoint(self)


def _check_same(a: AlgebraElement, b: AlgebraElement) -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape.block_sizes} vs {b.shape.block_sizes}")


def alg_add(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    _check_same(a, b)
    return AlgebraElement(a.shape, [x + y for x, y in zip(a.blocks, b.blocks)])


def alg_mul(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    _check_same(a, b)
    return AlgebraElement(a.shape, [x @ y for x, y in zip(a.blocks, b.blocks)])


def alg_adjoint(a: AlgebraElement) -> AlgebraElement:
    return AlgebraElement(a.shape, [x.conj().T for x in a.blocks])


def alg_scale(a: AlgebraElement, c: complex) -> AlgebraElement:
    if isinstance(c, AlgebraElement):
        raise TypeError("alg_scale takes a scalar; use alg_mul for products")
    return AlgebraElement(a.shape, [c * x for x in a.blocks])


def matrix_norm(m: np.ndarray) -> float:
    """Spectral norm of a single matrix; 0 for empty matrices."""
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def alg_norm(a: AlgebraElement) -> float:
    """C*-norm: the largest singular value over all summands."""
    return max(matrix_norm(b) for b in a.blocks)


def commutator(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    """``[a, b] = ab - ba``."""
    _check_same(a, b)
    return AlgebraElement(a.shape, [x @ y - y @ x for x, y in zip(a.blocks, b.blocks)])


def hermitian_defect(m: np.ndarray) -> float:
    return matrix_norm(m - m.conj().T)


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def apply_to_hermitian(m: np.ndarray, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """``f(m)`` for a Hermitian matrix via eigendecomposition.

    ``m`` is symmetrized first so small drift from exact self-adjointness is
    harmless. ``f`` is applied vectorized to the eigenvalue array.
    """
    if m.size == 0:
        return np.zeros_like(m, dtype=np.complex128)
    w, v = np.linalg.eigh(hermitize(m))
    fw = np.asarray(f(w))
    return (v * fw) @ v.conj().T


def _require_self_adjoint(blocks, tol: float) -> None:
    scale = max((matrix_norm(b) for b in blocks), default=0.0)
    for b in blocks:
        if hermitian_defect(b) > tol * scale:
            raise NotSelfAdjoint(
                f"‖a - a*‖ = {hermitian_defect(b):.3e} exceeds {tol:g}·‖a‖ = {tol * scale:.3e}"
            )


def functional_calculus(
    a: AlgebraElement,
    f: Callable[[np.ndarray], np.ndarray],
    hermitian_tol: float = HERMITIAN_TOL,
) -> AlgebraElement:
    """Continuous functional calculus ``f(a)`` for self-adjoint ``a``.

    ``f`` receives a real ndarray of eigenvalues and must return an array of
    the same length. Real-valued ``f`` yields a self-adjoint result.

    Raises
    ------
    NotSelfAdjoint
        If ``‖a - a*‖ > hermitian_tol·‖a‖``.
    """
    _require_self_adjoint(a.blocks, hermitian_tol)
    return AlgebraElement(a.shape, [apply_to_hermitian(b, f) for b in a.blocks])


def _power_function(alpha: float):
    if alpha == 1:
        return lambda w: w
    return lambda w: np.power(w, alpha)


def hermitian_power(m: np.ndarray, alpha: float, pos_tol: float = POS_TOL) -> np.ndarray:
    """``m**alpha`` for a positive semidefinite matrix, clamping negative drift."""
    if m.size == 0:
        return np.zeros_like(m, dtype=np.complex128)
    w, v = np.linalg.eigh(hermitize(m))
    scale = float(np.max(np.abs(w)))
    if w[0] < -pos_tol * scale:
        raise NotPositive(f"minimum eigenvalue {w[0]:.3e} below -{pos_tol:g}·‖a‖")
    # below the numerical-rank floor an eigenvalue is indistinguishable from 0;
    # for alpha < 1 leaving it in would turn 1e-16 into 1e-8
    w = np.where(w > m.shape[0] * _EPS * scale, w, 0.0)
    return (v * _power_function(alpha)(w)) @ v.conj().T


def alg_power(a: AlgebraElement, alpha: float, pos_tol: float = POS_TOL) -> AlgebraElement:
    """``a**alpha`` for positive ``a`` and ``alpha > 0``.

    Eigenvalues in ``[-pos_tol·‖a‖, 0)`` are treated as rounding noise and
    clamped to zero.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    _require_self_adjoint(a.blocks, HERMITIAN_TOL)
    return AlgebraElement(a.shape, [hermitian_power(b, alpha, pos_tol) for b in a.blocks])


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a self-adjoint element, ascending, all summands pooled."""

    eigenvalues: np.ndarray

    def __len__(self):
        return len(self.eigenvalues)


def spectrum(a: AlgebraElement, hermitian_tol: float = HERMITIAN_TOL) -> Spectrum:
    _require_self_adjoint(a.blocks, hermitian_tol)
    w = np.concatenate([np.linalg.eigvalsh(hermitize(b)) for b in a.blocks])
    return Spectrum(np.sort(w))


class Witness(NamedTuple):
    summand: int
    eigenvalue: float
    eigenvector: np.ndarray


class PositivityResult(NamedTuple):
    is_positive: bool
    witness: Witness | None
    reason: str = ""

    def __bool__(self):
        return self.is_positive


def positivity_check(a: AlgebraElement, pos_tol: float = POS_TOL) -> PositivityResult:
    """Decide ``a >= 0`` to tolerance.

    A failing check carries the most negative eigenpair as witness, or no
    witness when ``a`` is not even self-adjoint.
    """
    scale = alg_norm(a)
    for b in a.blocks:
        if hermitian_defect(b) > HERMITIAN_TOL * scale:
            return PositivityResult(False, None, "not self-adjoint")
    worst = None
    for i, b in enumerate(a.blocks):
        w, v = np.linalg.eigh(hermitize(b))
        if worst is None or w[0] < worst.eigenvalue:
            worst = Witness(i, float(w[0]), v[:, 0])
    if worst.eigenvalue < -pos_tol * scale:
        return PositivityResult(False, worst, "negative eigenvalue")
    return PositivityResult(True, None)
