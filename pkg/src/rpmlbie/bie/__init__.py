"""Boundary integral discretization: quadrature, operators and the coupled solve."""

from .alpert import NODES, SKIP, WEIGHTS
from .operators import SideGeometry, assemble, layer_potentials
from .solver import (Cylindrical, InterfaceProblem, NtD, Plane, Solution,
                     couple_and_solve, ntd)

__all__ = [
    "NODES", "WEIGHTS", "SKIP", "SideGeometry", "assemble", "layer_potentials",
    "Cylindrical", "Plane", "InterfaceProblem", "Solution", "NtD", "ntd",
    "couple_and_solve",
]
