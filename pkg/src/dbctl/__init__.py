"""Dirac-Bergmann constraint analysis for optimal-control problems."""

__version__ = "0.1.0"
