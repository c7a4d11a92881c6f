"""Numerical toolkit for bilinear multipliers along non-flat curves.

Subpackages cover, bottom to top: smooth cutoffs (bumps), oscillatory
quadrature, curve models with rescaled profiles, dual phases built from the
profile primitive, the localized multiplier and its stationary-phase model,
wave packets on dyadic lattices, the discretized bilinear pieces and their
interaction statistics, quadratic exponential sums, and a reproducible
experiment harness with a command line front end.
"""

__version__ = "0.1.0"
