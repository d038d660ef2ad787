"""Compiled kernels. Built from ``commutators.pyx`` at install time."""
