"""Weakly malnormal subgroups of free and virtually free groups."""

from .words import Word, BoundaryPoint
from .stallings import Subgroup, build, INFINITE
from .pingpong import CandidateBudget
from .vfree import GElement, VirtuallyFreeData, validate

__all__ = [
    "Word",
    "BoundaryPoint",
    "Subgroup",
    "build",
    "INFINITE",
    "CandidateBudget",
    "GElement",
    "VirtuallyFreeData",
    "validate",
]
