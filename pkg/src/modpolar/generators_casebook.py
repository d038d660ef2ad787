"""Seeded operator generators, the labeled corpus, and the truncation diagnostic.

All randomness comes from numpy's counter-based Philox bit generator keyed by
the seed of a ``GeneratorSpec``, so a spec reproduces the same operator on every platform.
Random complex entries have real and imaginary parts uniform on ``[-1, 1]``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .centered import centered_direct
from .cstar_core import AlgebraShape
from .errors import InvalidSpec
from .hilbert_module import AdjointableOp, ModuleSpace, converge_range_projection


class Kind(str, Enum):
    WeightedShift = "WeightedShift"
    Normal = "Normal"
    Unitary = "Unitary"
    Positive = "Positive"
    GenericDense = "GenericDense"
    JordanLike = "JordanLike"
    BlockAlgebraRandom = "BlockAlgebraRandom"


@dataclass(frozen=True)
class GeneratorSpec:
    """Recipe for one operator.

    ``rank`` is the domain rank ``k``; ``codomain_rank`` defaults to ``k`` and
    may differ only for ``BlockAlgebraRandom``. ``weights`` (WeightedShift,
    length ``k - 1``) and ``eigenvalues`` (Normal/Unitary/Positive, length
    ``k``) are drawn from the seed when omitted. ``diagonal=True`` skips the
    random unitary change of basis.
    """

    kind: Kind
    rank: int
    block_sizes: tuple[int, ...] = (1,)
    codomain_rank: int | None = None
    weights: tuple[float, ...] | None = None
    eigenvalues: tuple[complex, ...] | None = None
    diagonal: bool = False
    seed: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", Kind(self.kind))
        except ValueError as exc:
            raise InvalidSpec(f"unknown kind {self.kind!r}") from exc
        if int(self.rank) < 1:
            raise InvalidSpec("rank must be >= 1")
        try:
            AlgebraShape(tuple(self.block_sizes))
        except ValueError as exc:
            raise InvalidSpec(str(exc)) from exc
        object.__setattr__(self, "block_sizes", tuple(int(n) for n in self.block_sizes))
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidSpec("seed must fit in 64 unsigned bits")
        m = self.codomain_rank
        if m is not None and m != self.rank and self.kind is not Kind.BlockAlgebraRandom:
            raise InvalidSpec(f"{self.kind.value} operators are square")
        if m is not None and m < 1:
            raise InvalidSpec("codomain_rank must be >= 1")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if self.kind is not Kind.WeightedShift:
                raise InvalidSpec("weights only apply to WeightedShift")
            if len(w) != self.rank - 1:
                raise InvalidSpec(f"need {self.rank - 1} weights for rank {self.rank}")
            if any(not x > 0 for x in w):
                raise InvalidSpec("shift weights must be strictly positive")
            object.__setattr__(self, "weights", w)
        if self.eigenvalues is not None:
            ev = tuple(complex(x) for x in self.eigenvalues)
            if self.kind not in (Kind.Normal, Kind.Unitary, Kind.Positive):
                raise InvalidSpec("eigenvalues only apply to Normal, Unitary, Positive")
            if len(ev) != self.rank:
                raise InvalidSpec(f"need {self.rank} eigenvalues")
            if self.kind is Kind.Positive and any(x.imag != 0 or x.real < 0 for x in ev):
                raise InvalidSpec("Positive eigenvalues must be nonnegative reals")
            if self.kind is Kind.Unitary and any(abs(abs(x) - 1) > 1e-12 for x in ev):
                raise InvalidSpec("Unitary eigenvalues must have modulus 1")
            object.__setattr__(self, "eigenvalues", ev)

    @property
    def shape(self) -> AlgebraShape:
        return AlgebraShape(self.block_sizes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        d["block_sizes"] = list(self.block_sizes)
        if self.weights is not None:
            d["weights"] = list(self.weights)
        if self.eigenvalues is not None:
            d["eigenvalues"] = [[z.real, z.imag] for z in self.eigenvalues]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        d = dict(d)
        if d.get("eigenvalues") is not None:
            d["eigenvalues"] = tuple(
                complex(*z) if isinstance(z, (list, tuple)) else complex(z) for z in d["eigenvalues"]
            )
        if d.get("weights") is not None:
            d["weights"] = tuple(d["weights"])
        d["block_sizes"] = tuple(d.get("block_sizes", (1,)))
        try:
            return cls(**d)
        except TypeError as exc:
            raise InvalidSpec(str(exc)) from exc


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def random_complex(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.uniform(-1, 1, shape) + 1j * rng.uniform(-1, 1, shape)


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    q, r = np.linalg.qr(random_complex(rng, (d, d)))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def _scalar_op(mat: np.ndarray, shape: AlgebraShape) -> AdjointableOp:
    return AdjointableOp.from_scalar_matrix(mat, shape)


def _spectral_op(spec: GeneratorSpec, rng, eig: np.ndarray) -> AdjointableOp:
    """``V diag(eig ⊗ 1) V*`` per summand, ``V`` a seeded unitary of the flattened size."""
    shape = spec.shape
    space = ModuleSpace(shape, spec.rank)
    blocks = []
    for n in shape.block_sizes:
        lam = np.repeat(eig, n)
        if spec.diagonal:
            blocks.append(np.diag(lam))
        else:
            v = random_unitary(rng, spec.rank * n)
            blocks.append((v * lam) @ v.conj().T)
    return AdjointableOp(space, space, blocks)


def generate(spec: GeneratorSpec) -> AdjointableOp:
    """Build the operator described by ``spec``; deterministic in ``spec.seed``.

    A weighted shift maps ``e_i`` to ``w_i e_{i+1}`` and ``e_k`` to 0; each
    weight acts as a scalar on every summand.
    """
    rng = rng_for(spec.seed)
    k, shape = spec.rank, spec.shape
    kind = spec.kind
    if kind is Kind.WeightedShift:
        w = np.array(spec.weights if spec.weights is not None else rng.uniform(0.25, 2.0, k - 1))
        return _scalar_op(np.diag(w, -1) if k > 1 else np.zeros((1, 1)), shape)
    if kind is Kind.Normal:
        eig = np.array(spec.eigenvalues) if spec.eigenvalues is not None else random_complex(rng, k)
        return _spectral_op(spec, rng, eig)
    if kind is Kind.Unitary:
        if spec.eigenvalues is not None:
            eig = np.array(spec.eigenvalues)
        else:
            eig = np.exp(1j * rng.uniform(-np.pi, np.pi, k))
        return _spectral_op(spec, rng, eig)
    if kind is Kind.Positive:
        eig = np.array(spec.eigenvalues).real if spec.eigenvalues is not None else rng.uniform(0, 1, k)
        return _spectral_op(spec, rng, eig)
    if kind is Kind.JordanLike:
        if k < 2:
            raise InvalidSpec("JordanLike needs rank >= 2")
        lam = random_complex(rng, 1)[0]
        off = rng.uniform(0.5, 1.5, k - 1) * np.exp(1j * rng.uniform(-np.pi, np.pi, k - 1))
        j = lam * np.eye(k) + np.diag(off, 1)
        if not spec.diagonal:
            v = random_unitary(rng, k)
            j = v @ j @ v.conj().T
        return _scalar_op(j, shape)
    # GenericDense and BlockAlgebraRandom: dense random flattened blocks
    m = spec.codomain_rank or k
    dom, cod = ModuleSpace(shape, k), ModuleSpace(shape, m)
    return AdjointableOp(dom, cod, [random_complex(rng, (m * n, k * n)) for n in shape.block_sizes])


CENTERED = "centered"
NOT_CENTERED = "not-centered"
UNKNOWN = "unknown"

LABELS = {
    Kind.WeightedShift: CENTERED,
    Kind.Normal: CENTERED,
    Kind.Unitary: CENTERED,
    Kind.Positive: CENTERED,
    Kind.JordanLike: NOT_CENTERED,
    Kind.GenericDense: UNKNOWN,
    Kind.BlockAlgebraRandom: UNKNOWN,
}

CORPUS_SHAPES = ((1,), (2,), (1, 2), (3,))
CORPUS_MIX = (
    (Kind.WeightedShift, 2),
    (Kind.Normal, 2),
    (Kind.Unitary, 1),
    (Kind.Positive, 1),
    (Kind.JordanLike, 2),
    (Kind.GenericDense, 2),
)


class LabeledOperator(NamedTuple):
    op: AdjointableOp
    label: str
    spec: GeneratorSpec


def _corpus_spec(kind: Kind, rng: np.random.Generator, seed: int) -> GeneratorSpec:
    shape = CORPUS_SHAPES[int(rng.integers(len(CORPUS_SHAPES)))]
    if kind is Kind.WeightedShift:
        rank = int(rng.integers(2, 5))
    elif kind is Kind.JordanLike:
        rank = int(rng.integers(2, 4))
    else:
        rank = int(rng.integers(1, 4))
    return GeneratorSpec(kind=kind, rank=rank, block_sizes=shape, seed=seed)


def corpus(seed: int, count: int, mix: Sequence[tuple[Kind, int]] = CORPUS_MIX) -> list[LabeledOperator]:
    """``count`` seeded operators with ground-truth labels.

    JordanLike members are checked with ``centered_direct`` when generated and
    redrawn in the (measure-zero) event that they come out centered.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    kinds = [k for k, w in mix for _ in range(w)]
    ss = np.random.SeedSequence(seed)
    rng = rng_for(seed)
    out = []
    for child in ss.spawn(count):
        kind = kinds[int(rng.integers(len(kinds)))]
        sub = int(child.generate_state(1, dtype=np.uint64)[0])
        while True:
            spec = _corpus_spec(kind, rng, sub)
            op = generate(spec)
            if kind is not Kind.JordanLike or not centered_direct(op, 1)[0]:
                break
            sub = (sub + 1) % 2**64
        out.append(LabeledOperator(op, LABELS[kind], spec))
    return out


def random_operator(rng: np.random.Generator, shape: Sequence[int], k: int, m: int) -> AdjointableOp:
    """Dense random operator ``A^k -> A^m`` drawn from an existing generator."""
    shape = AlgebraShape(tuple(shape))
    dom, cod = ModuleSpace(shape, k), ModuleSpace(shape, m)
    return AdjointableOp(dom, cod, [random_complex(rng, (m * n, k * n)) for n in shape.block_sizes])


class TruncationRecord(NamedTuple):
    d: int
    min_singular: float
    n_required: int


def truncated_harmonic(d: int) -> AdjointableOp:
    """``diag(1, 1/2, ..., 1/d)`` on ``C^d``."""
    return AdjointableOp.from_scalar_matrix(np.diag(1.0 / np.arange(1, d + 1)))


def example312_diagnostic(d: int, eps: float) -> TruncationRecord:
    """Iterations the resolvent approximant needs on the truncated ``e_n -> e_n/n``.

    As ``d`` grows the least eigenvalue ``1/d`` drives ``n_required`` up
    linearly; in infinite dimension the range is not closed and no finite
    ``n`` works uniformly.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    s = truncated_harmonic(d)
    sigma = np.linalg.svd(s.blocks[0], compute_uv=False)
    conv = converge_range_projection(s, eps)
    return TruncationRecord(d, float(sigma[-1]), conv.n)
