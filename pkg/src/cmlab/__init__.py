"""Checkers and searches for Mealy machines that reproduce the certain
predictions of sequential two-qubit Pauli measurements on the 3x3 square
and its 15-observable extension, and the minimal memory any such machine
needs."""

__version__ = "0.1.0"

from .observables import build_extended_square, build_pm_square, structure_by_name

__all__ = [
    "__version__",
    "build_pm_square",
    "build_extended_square",
    "structure_by_name",
]
