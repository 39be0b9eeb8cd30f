"""Numerical spectral calculus for 1-D Schrodinger operators."""

__version__ = "0.1.0"
