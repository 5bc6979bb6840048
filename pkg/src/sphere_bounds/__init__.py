"""Optimal interpolation constants and first-eigenvalue bounds on the sphere S^d."""

from sphere_bounds.constants import (
    DomainError,
    ProblemParams,
    exponents,
    kappa,
    sobolev_constant,
    sphere_surface,
)

__all__ = [
    "DomainError",
    "ProblemParams",
    "exponents",
    "kappa",
    "sobolev_constant",
    "sphere_surface",
]

__version__ = "0.1.0"
