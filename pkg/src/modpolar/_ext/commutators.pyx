# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Pairwise commutator Frobenius norms for stacks of small complex matrices."""
import numpy as np

from libc.math cimport sqrt


def pairwise_commutator_fro(double complex[:, :, ::1] a, double complex[:, :, ::1] b):
    """``out[i, j] = ‖a[i] b[j] - b[j] a[i]‖_F`` for square stacks of equal size."""
    cdef Py_ssize_t fa = a.shape[0], fb = b.shape[0], d = a.shape[1]
    if a.shape[2] != d or b.shape[1] != d or b.shape[2] != d:
        raise ValueError("stacks must hold square matrices of one size")
    out = np.zeros((fa, fb), dtype=np.float64)
    cdef double[:, ::1] res = out
    cdef Py_ssize_t i, j, r, c, q
    cdef double complex acc
    cdef double tot
    with nogil:
        for i in range(fa):
            for j in range(fb):
                tot = 0.0
                for r in range(d):
                    for c in range(d):
                        acc = 0
                        for q in range(d):
                            acc = acc + a[i, r, q] * b[j, q, c] - b[j, r, q] * a[i, q, c]
                        tot = tot + acc.real * acc.real + acc.imag * acc.imag
                res[i, j] = sqrt(tot)
    return out


def self_commutator_fro(double complex[:, :, ::1] a):
    """Upper triangle of ``pairwise_commutator_fro(a, a)``; the result is symmetric."""
    cdef Py_ssize_t f = a.shape[0], d = a.shape[1]
    if a.shape[2] != d:
        raise ValueError("stack must hold square matrices")
    out = np.zeros((f, f), dtype=np.float64)
    cdef double[:, ::1] res = out
    cdef Py_ssize_t i, j, r, c, q
    cdef double complex acc
    cdef double tot
    with nogil:
        for i in range(f):
            for j in range(i + 1, f):
                tot = 0.0
                for r in range(d):
                    for c in range(d):
                        acc = 0
                        for q in range(d):
                            acc = acc + a[i, r, q] * a[j, q, c] - a[j, r, q] * a[i, q, c]
                        tot = tot + acc.real * acc.real + acc.imag * acc.imag
                res[i, j] = sqrt(tot)
                res[j, i] = res[i, j]
    return out
