"""Families of integrals over the level sets of grid-sampled functions."""

from __future__ import annotations

from .family import LevelFamily, LevelRange, compute_family, differentiate_family, mean_intensity_profile
from .grid import ContractViolation, GradientField, GridSpec, ScalarField, estimate_gradient

__all__ = [
    "ContractViolation",
    "GradientField",
    "GridSpec",
    "LevelFamily",
    "LevelRange",
    "ScalarField",
    "compute_family",
    "differentiate_family",
    "estimate_gradient",
    "mean_intensity_profile",
]
