"""Pure numpy fallback for the compiled commutator kernels."""
import numpy as np


def pairwise_commutator_fro(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1:] != b.shape[1:] or a.shape[1] != a.shape[2]:
        raise ValueError("stacks must hold square matrices of one size")
    ab = a[:, None] @ b[None, :]
    ba = b[None, :] @ a[:, None]
    return np.linalg.norm(ab - ba, axis=(-2, -1))


def self_commutator_fro(a: np.ndarray) -> np.ndarray:
    return pairwise_commutator_fro(a, a)
