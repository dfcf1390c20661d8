"""Numerical laboratory for the lightlike fibre structure of the free scalar
field: chiral fibre vectors, standard-subspace modular data, distorted
translations and dilations of null cuts, and the relative entropy of
coherent states with its deformation inequalities."""

from .errors import (
    BoundaryLeak,
    NonConvergent,
    NotCyclic,
    NotSeparating,
    NullplaneError,
    ProfileOrderViolation,
    ScenarioError,
    SingularSpectrum,
    ZeroMassZeroMomentum,
    ZeroModePresent,
)
from .numerics import QuadratureSpec, SmoothBump, SmoothFn1D, balanced_pair
from .oneparticle import MassShellParams, ThinTestFunction
from .nullcut import CutProfile, profile_max, profile_min
from .entropy import BMTState

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BMTState",
    "BoundaryLeak",
    "CutProfile",
    "MassShellParams",
    "NonConvergent",
    "NotCyclic",
    "NotSeparating",
    "NullplaneError",
    "ProfileOrderViolation",
    "QuadratureSpec",
    "ScenarioError",
    "SingularSpectrum",
    "SmoothBump",
    "SmoothFn1D",
    "ThinTestFunction",
    "ZeroMassZeroMomentum",
    "ZeroModePresent",
    "balanced_pair",
    "profile_max",
    "profile_min",
]
