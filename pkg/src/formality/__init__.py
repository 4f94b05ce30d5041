"""Exact-arithmetic verification kernel for filtered DGLAs and L-infinity
algebras: gauge action, twisting, convolution-algebra homotopies of morphisms,
and chart-level Fedosov resolutions, all checked as exact rational identities
on truncated instances."""

__version__ = "0.1.0"
