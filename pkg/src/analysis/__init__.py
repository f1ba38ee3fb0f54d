"""Spectral analysis, positive-definiteness witnesses and Laplace-Beltrami checks."""
