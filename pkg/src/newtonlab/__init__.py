"""Solver laboratory for optimization-based implicit FEM elasticity.

Backward Euler time integration of hyperelastic tetrahedral solids,
solved by four Newton-type methods (exact Newton, Projected Newton,
Project-on-Demand Newton, Kinetic Newton) with interchangeable line
searches and convergence criteria, plus a benchmark CLI that records
per-step solver diagnostics.
"""

__version__ = "0.1.0"

__all__ = [
    "assembly", "bench", "fem", "geometry", "linalg", "linesearch",
    "materials", "potential", "solvers",
]
