"""Defect (signed area) of Laplace eigenfunctions on the square and hexagonal tori."""

from .errors import (
    BudgetError,
    ConsistencyError,
    ConvergenceError,
    EmptySpectrumError,
    ToralDefectError,
    UnsupportedLengthError,
)
from .lattice import EnergyLevel, LatticePoint, enumerate_lattice_points

__all__ = [
    "BudgetError",
    "ConsistencyError",
    "ConvergenceError",
    "EmptySpectrumError",
    "EnergyLevel",
    "LatticePoint",
    "ToralDefectError",
    "UnsupportedLengthError",
    "enumerate_lattice_points",
]
