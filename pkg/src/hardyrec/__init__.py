"""Integer parts of Hardy-field sequences: certified evaluation, equidistribution,
nilmanifold orbits, polynomial patterns, PET induction and recurrence experiments."""

from __future__ import annotations

__version__ = "0.1.0"

from .certified import evaluate, floor_eval, range_enumerate
from .expr import differentiate, parse, to_string
from .growth import compare_growth, eventual_sign, growth_exponent

__all__ = [
    "__version__",
    "parse",
    "to_string",
    "differentiate",
    "evaluate",
    "floor_eval",
    "range_enumerate",
    "growth_exponent",
    "compare_growth",
    "eventual_sign",
]
