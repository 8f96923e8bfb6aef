"""Lattice toolkit for generalized Seiberg-Witten equations and twistor-space
almost complex structures on four-manifolds."""

__version__ = "0.1.0"
