"""Generators of concrete tree systems, decompositions and labeled systems."""

from .circle import circle_generator, gen_punctured_circle, standard_family
from .disk import gen_reflection_disk
from .interval import gen_punctured_interval, interval_cuts
from .labeled import complete_labeled, export_sequence, gen_labeled, labeled_path
from .random_system import gen_random, random_partition

__all__ = [
    "circle_generator",
    "complete_labeled",
    "export_sequence",
    "gen_labeled",
    "gen_punctured_circle",
    "gen_punctured_interval",
    "gen_random",
    "gen_reflection_disk",
    "interval_cuts",
    "labeled_path",
    "random_partition",
    "standard_family",
]
