"""Finite approximations of limits of tree systems of metric compacta."""

from .metric import FiniteCompactum, gh_upper, quotient_metric
from .realize import BasePointing, Realization, WeightSchedule, choose_basepoints, realize_limit, realize_star
from .report import Report
from .system import TreeSystem, find_isomorphism, validate_system
from .tree import Tree

__version__ = "0.1.0"

__all__ = [
    "BasePointing",
    "FiniteCompactum",
    "Realization",
    "Report",
    "Tree",
    "TreeSystem",
    "WeightSchedule",
    "choose_basepoints",
    "find_isomorphism",
    "gh_upper",
    "quotient_metric",
    "realize_limit",
    "realize_star",
    "validate_system",
]
