"""Desk-scale verification toolkit for symplectic lattice-chain
combinatorics, parahoric level structures, flag-variety fixed-point counts
and orbital integrals for GSp(4) over Q_p."""

__version__ = "0.1.0"
