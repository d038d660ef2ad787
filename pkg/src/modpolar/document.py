"""JSON operator documents.

An operator document looks like::

    {"algebra": [1, 2], "domain_rank": 2, "codomain_rank": 2,
     "entries": [...]}

``entries[i][r][c][a][b]`` is the ``[re, im]`` pair at row ``a``, column ``b``
of entry ``(r, c)`` of the operator matrix, restricted to summand ``i``.
Floats are written with Python's shortest round-trip repr, so
parse(serialize(T)) reproduces ``T`` bit for bit.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .cstar_core import AlgebraShape
from .hilbert_module import AdjointableOp, ModuleSpace


class DocumentError(ValueError):
    """Malformed or inconsistent operator document."""


def _clean(x: float) -> float:
    # folds -0.0 into 0.0 so equal operators serialize identically
    return float(x) + 0.0


def op_to_document(t: AdjointableOp) -> dict:
    m, k = t.codomain.rank, t.domain.rank
    entries = []
    for n, b in zip(t.shape.block_sizes, t.blocks):
        summand = []
        for r in range(m):
            row = []
            for c in range(k):
                tile = b[r * n:(r + 1) * n, c * n:(c + 1) * n]
                row.append([[[_clean(z.real), _clean(z.imag)] for z in line] for line in tile])
            summand.append(row)
        entries.append(summand)
    return {
        "algebra": list(t.shape.block_sizes),
        "domain_rank": k,
        "codomain_rank": m,
        "entries": entries,
    }


def _int(doc: dict, key: str) -> int:
    v = doc.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise DocumentError(f"{key!r} must be a positive integer")
    return v


def _number(v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise DocumentError(f"entry component {v!r} is not a finite number")
    return float(v)


def document_to_op(doc) -> AdjointableOp:
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    algebra = doc.get("algebra")
    if not isinstance(algebra, list) or not algebra:
        raise DocumentError("'algebra' must be a nonempty list of block sizes")
    if any(not isinstance(n, int) or isinstance(n, bool) or n < 1 for n in algebra):
        raise DocumentError("block sizes must be positive integers")
    k, m = _int(doc, "domain_rank"), _int(doc, "codomain_rank")
    entries = doc.get("entries")
    if not isinstance(entries, list) or len(entries) != len(algebra):
        raise DocumentError("'entries' needs one item per summand")
    blocks = []
    for n, summand in zip(algebra, entries):
        try:
            arr = np.array(summand, dtype=object)
        except ValueError as exc:
            raise DocumentError(f"ragged entries: {exc}") from exc
        if arr.shape != (m, k, n, n, 2):
            raise DocumentError(f"summand of size {n}: expected extents {(m, k, n, n, 2)}, got {arr.shape}")
        vals = np.vectorize(_number, otypes=[float])(arr)
        cplx = vals[..., 0] + 1j * vals[..., 1]
        # (r, c, a, b) -> (r, a, c, b) -> flattened rows r*n+a, cols c*n+b
        blocks.append(cplx.transpose(0, 2, 1, 3).reshape(m * n, k * n))
    shape = AlgebraShape(tuple(algebra))
    return AdjointableOp(ModuleSpace(shape, k), ModuleSpace(shape, m), blocks)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def loads_operator(text: str) -> AdjointableOp:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc}") from exc
    return document_to_op(doc)


def read_operator(path: str | Path) -> AdjointableOp:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DocumentError(f"cannot read {path}: {exc}") from exc
    return loads_operator(text)


def write_operator(t: AdjointableOp, path: str | Path) -> None:
    Path(path).write_text(dumps(op_to_document(t)) + "\n", encoding="utf-8")
