"""Determinantal-variety invariants of multipartite quantum states."""

__version__ = "0.1.0"

from .scalars import Gauss, Mode, ModeError
from .states import (
    DensityMatrix,
    Ensemble,
    FamilyParams,
    density_from_ensemble,
    ensemble_from_density,
    family_state,
    partial_transpose,
    ppt_check,
    smolin_state,
)
from .varieties import build_pencil, parse_cut, variety_polynomials
from .classify import family_equivalence, family_lambda, is_linear_variety, separability_verdict

__all__ = [
    "DensityMatrix",
    "Ensemble",
    "FamilyParams",
    "Gauss",
    "Mode",
    "ModeError",
    "build_pencil",
    "density_from_ensemble",
    "ensemble_from_density",
    "family_equivalence",
    "family_lambda",
    "family_state",
    "is_linear_variety",
    "parse_cut",
    "partial_transpose",
    "ppt_check",
    "separability_verdict",
    "smolin_state",
    "variety_polynomials",
]
