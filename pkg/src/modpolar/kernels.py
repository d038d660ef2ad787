"""Backend selection for the hot kernels.

The compiled extension is used when importable; setting
``MODPOLAR_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("MODPOLAR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._ext import commutators as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass


def _stack(mats) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(mats, dtype=np.complex128))


def pairwise_commutator_fro(a, b) -> np.ndarray:
    """``out[i, j] = ‖a_i b_j - b_j a_i‖_F``."""
    a, b = _stack(a), _stack(b)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]))
    return _impl.pairwise_commutator_fro(a, b)


def self_commutator_fro(a) -> np.ndarray:
    """Symmetric matrix of commutator Frobenius norms within one stack."""
    a = _stack(a)
    if a.shape[0] == 0:
        return np.zeros((0, 0))
    return _impl.self_commutator_fro(a)
