"""Fractional Laplacian on the unit ball: kernels, linear and semilinear
Dirichlet solvers, boundary-rate fits, walk-on-spheres and identity checks."""

from .special import DomainError, FracParams

__all__ = ["DomainError", "FracParams"]
__version__ = "0.1.0"
