"""Kernels, measures on the sphere and spherical harmonic bases."""
