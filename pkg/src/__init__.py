"""Spherical energy minimization toolkit."""

__version__ = "0.1.0"
