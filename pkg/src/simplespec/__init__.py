"""Rank-one perturbations, Jacobi and CMV decoupling, and numerical checks of
spectral simplicity for finite windows."""

__version__ = "0.1.0"
