"""Weak-coupling (Dyson) and strong-coupling (backward, 1/g) expansions of a
time-evolution operator, with exact solvers to measure both."""

__version__ = "0.1.0"
