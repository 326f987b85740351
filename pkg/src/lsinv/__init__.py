"""Local-symmetry invariants: two-point currents of 1D lattice wavefunctions, static and driven."""

__version__ = "0.1.0"
