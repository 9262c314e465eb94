"""Numerical conformal mapping with Bieberbach and area-orthonormal polynomials."""

__version__ = "1.0.0"
