"""Boundary integral solver with regionalized perfectly matched layers for
scattering at locally perturbed interfaces between anisotropic media."""

from .background import BackgroundGreens, PlaneBackground, free_space
from .bie import Cylindrical, InterfaceProblem, Plane, Solution
from .config import RunConfig
from .errors import BranchCutError, ConfigError, EigenfrequencyError, NumericalError, RpmlBieError
from .geometry import BoundaryCurve, build_mesh, bump_dip_curve, flat_curve, squares_curve
from .media import DerivedMedium, PermittivityTensor, derive_medium, medium_from_permittivity
from .rpml import StretchProfile, side_maps

__version__ = "0.1.0"

__all__ = [
    "BackgroundGreens", "PlaneBackground", "free_space", "Cylindrical", "InterfaceProblem",
    "Plane", "Solution", "RunConfig", "BranchCutError", "ConfigError", "EigenfrequencyError",
    "NumericalError", "RpmlBieError", "BoundaryCurve", "build_mesh", "bump_dip_curve",
    "flat_curve", "squares_curve", "DerivedMedium", "PermittivityTensor", "derive_medium",
    "medium_from_permittivity", "StretchProfile", "side_maps",
]
