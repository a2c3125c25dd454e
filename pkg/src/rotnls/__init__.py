"""Numerical laboratory for the focusing mass-supercritical NLS with rotation
and anisotropic harmonic trap: spectral grids, physical functionals, the free
reference profile and its thresholds, trap spectrum, variational ground
states, split-step dynamics, blow-up classification and stability
experiments."""

__version__ = "0.1.0"
