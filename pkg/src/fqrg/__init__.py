"""Exhaustive classification of quantum Riemannian geometries over F2."""

__version__ = "0.1.0"
