"""Pseudo-spectral simulator for a density-dependent viscoelastic fluid.

The package integrates an incompressible (optionally compressible) system
coupling mass transport, momentum with an elastic stress, and transport-
stretching of a deformation field on the periodic box, and ships a
diagnostics suite that numerically verifies the exact structural identities
of that system: energy balance, constraint propagation, curl compatibility,
log-density gradient transport, a dissipative heat-kernel combination, and
the parabolic scaling symmetry.
"""

__version__ = "0.1.0"

from .grid import Grid, ScalarField, TensorField, VectorField, make_grid
from .state import PressureLaw, State, equilibrium_state

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "TensorField",
    "make_grid",
    "State",
    "PressureLaw",
    "equilibrium_state",
    "__version__",
]
