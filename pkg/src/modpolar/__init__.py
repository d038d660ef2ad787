"""Polar decomposition and centered operators on Hilbert modules over ⊕ M_n(C)."""
