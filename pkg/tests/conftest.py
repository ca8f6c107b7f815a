from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from math import factorial

import numpy as np
import pytest


def exact_volume(tau, d) -> Fraction:
    """Unit-cube volume below ``z . d = tau`` in exact rationals.

    Plain inclusion-exclusion over every vertex subset, no pruning and no
    case split, so it shares no code path with the kernels under test.
    """
    tau = Fraction(tau)
    d = [Fraction(x) for x in d]
    n = len(d)
    total = Fraction(0)
    for m in range(n + 1):
        for subset in combinations(range(n), m):
            t = tau - sum((d[k] for k in subset), Fraction(0))
            if t > 0:
                total += (-1) ** m * t**n
    denom = factorial(n)
    for x in d:
        denom *= x
    return total / denom


def exact_rate(tau, d) -> Fraction:
    """Derivative of :func:`exact_volume` in ``tau``."""
    tau = Fraction(tau)
    d = [Fraction(x) for x in d]
    n = len(d)
    total = Fraction(0)
    for m in range(n + 1):
        for subset in combinations(range(n), m):
            t = tau - sum((d[k] for k in subset), Fraction(0))
            if t > 0:
                total += (-1) ** m * n * t ** (n - 1)
    denom = factorial(n)
    for x in d:
        denom *= x
    return total / denom


def random_d(rng: np.random.Generator, n: int, size: int | None = None, floor: float = 0.0) -> np.ndarray:
    """Sorted, L1-normalized increase vectors with entries at least ``floor``."""
    shape = (n,) if size is None else (size, n)
    raw = rng.random(shape)
    d = np.sort(raw / raw.sum(axis=-1, keepdims=True), axis=-1)
    if floor > 0:
        d = floor + (1.0 - n * floor) * d
    return d


def transitions(d) -> list[float]:
    """Case-transition points of the closed forms (including 0 and 1)."""
    d = list(d)
    if len(d) == 2:
        return [0.0, d[0], d[1], 1.0]
    d1, d2, d3 = d
    return [0.0, d1, d2, d3, d1 + d2, d1 + d3, d2 + d3, 1.0]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
