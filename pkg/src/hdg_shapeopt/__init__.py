"""Unfitted HDG solvers with transfer paths and a volume-constrained shape optimiser."""

__version__ = "0.1.0"
