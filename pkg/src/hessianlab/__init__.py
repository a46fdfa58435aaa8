"""Numerical laboratory for complex k-Hessian equations with gradient terms."""

__version__ = "0.1.0"
