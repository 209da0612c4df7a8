"""Numerical laboratory for ground states of the 1D pure-power NLS.

Soliton profiles, the linearized operator and its Jost/Evans/resolvent
theory, the internal-mode eigenvalue, the Fermi-golden-rule constant and a
split-step simulator with modulation diagnostics.
"""

__version__ = "0.1.0"

from .numerics import Field2, Grid, inner, derivative, integrate_ode, make_grid
from .profiles import Params, soliton, mass_energy, nonlinearity, refined_profile

__all__ = [
    "Field2",
    "Grid",
    "Params",
    "inner",
    "derivative",
    "integrate_ode",
    "make_grid",
    "soliton",
    "mass_energy",
    "nonlinearity",
    "refined_profile",
]
