"""Small argument checks shared by the estimator API and the CLI."""

from __future__ import annotations

import numbers
import os

import numpy as np

from .problem import ProblemGraph


def check_graph(graph) -> ProblemGraph:
    """Accept a :class:`ProblemGraph` or a dataset path."""
    if isinstance(graph, ProblemGraph):
        return graph
    if isinstance(graph, (str, os.PathLike)):
        from .io import parse

        return parse(graph)
    raise TypeError(f"expected a ProblemGraph or a dataset path, got {type(graph).__name__}")


def check_positive(name: str, value, allow_none: bool = False):
    if value is None and allow_none:
        return None
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive number, got {value!r}")
    return value


def check_int(name: str, value, minimum: int = 0, allow_none: bool = False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_choice(name: str, value, choices):
    if value not in choices:
        raise ValueError(f"{name} must be one of {sorted(choices)}, got {value!r}")
    return value


def check_probability(name: str, value):
    if not isinstance(value, numbers.Real) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)

    """Integer seed from ``None``, an int or a legacy ``RandomState``."""
def check_seed(value) -> int:
    """Integer seed from an int or a ``numpy.random.Generator``-free spec."""
    if value is None:
        return 0
    if isinstance(value, np.random.RandomState):
        return int(value.randint(2 ** 31 - 1))
    return check_int("random_state", value)


def check_points(a, b):
    """Two matching ``(n, d)`` float arrays."""
    from sklearn.utils import check_array, check_consistent_length

    a = check_array(a, dtype=float)
    b = check_array(b, dtype=float)
    check_consistent_length(a, b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    return a, b
