"""Fractional volume of the unit cube below a linear level, and its derivative.

For a normalized threshold ``tau`` and a vector ``d`` of fractional
directional increases (non-negative, ascending, summing to one),

    v(tau, d) = integral over [0, 1]^n of H(tau - z . d) dz.

The 2D and 3D kernels use case-by-case closed forms in their numerically
well-conditioned arrangement. Each formula is written once as a scalar
function and compiled twice: as a numba ``njit`` kernel for the traversal
loops, and as a ufunc behind the array API (:func:`v2d`, :func:`dv3d`, ...),
which broadcasts ``tau`` of shape ``S`` against ``d`` of shape ``S + (n,)``.

:func:`vnd` evaluates any dimension by inclusion-exclusion over the
spillover simplices.
"""

from __future__ import annotations

from itertools import combinations
from math import factorial, prod

import numba
import numpy as np

from .grid import ContractViolation

ZERO_TOL = 1e-12
NORM_TOL = 1e-12

_SIG2 = ["float64(float64, float64, float64)"]
_SIG3 = ["float64(float64, float64, float64, float64)"]


def _v2d_py(tau, d1, d2):
    if tau <= 0.0:
        return 0.0
    if tau >= 1.0:
        return 1.0
    if d1 < ZERO_TOL:
        return tau
    if tau < d1:
        v = tau * tau / (2.0 * d1 * d2)
    elif tau <= d2:
        v = (tau - 0.5 * d1) / d2
    else:
        v = 1.0 - (1.0 - tau) * (1.0 - tau) / (2.0 * d1 * d2)
    return min(1.0, max(0.0, v))


v2d_kernel = numba.njit(cache=True)(_v2d_py)


def _v3d_py(tau, d1, d2, d3):
    if tau <= 0.0:
        return 0.0
    if tau >= 1.0:
        return 1.0
    if d1 < ZERO_TOL:
        return v2d_kernel(tau, d2, d3)
    s12 = d1 + d2
    if tau < d1:
        v = (tau / d1) * (tau / d2) * (tau / d3) / 6.0
    elif tau < d2:
        v = d1 / d2 * (d1 / d3) / 6.0 + 0.5 * ((tau - d1) / d2) * (tau / d3)
    else:
        mid = (tau - 0.5 * s12) / d3
        up = 1.0 - tau - d3
        over = tau - d3
        p6 = 6.0 * d1 * d2 * d3
        if tau < min(d3, s12):
            v = mid + up * up * up / p6
        elif tau <= max(d3, s12):
            if d3 < s12:
                v = mid + (up * up * up - over * over * over) / p6
            else:
                v = mid
        elif tau <= d1 + d3:
            v = mid - over * over * over / p6
        elif tau <= d2 + d3:
            v = 1.0 - d1 / d2 * (d1 / d3) / 6.0 - 0.5 * ((1.0 - tau - d1) / d2) * ((1.0 - tau) / d3)
        else:
            w = 1.0 - tau
            v = 1.0 - (w / d1) * (w / d2) * (w / d3) / 6.0
    return min(1.0, max(0.0, v))


v3d_kernel = numba.njit(cache=True)(_v3d_py)


def _dv2d_py(tau, d1, d2):
    if tau < 0.0 or tau > 1.0:
        return 0.0
    if d1 < ZERO_TOL:
        return 1.0
    if tau < d1:
        return tau / d1 / d2
    if tau <= d2:
        return 1.0 / d2
    return (1.0 - tau) / d1 / d2


dv2d_kernel = numba.njit(cache=True)(_dv2d_py)


def _dv3d_py(tau, d1, d2, d3):
    if tau < 0.0 or tau > 1.0:
        return 0.0
    if d1 < ZERO_TOL:
        return dv2d_kernel(tau, d2, d3)
    s12 = d1 + d2
    q = 2.0 * d1 * d2
    if tau < d1:
        rate = (tau / d1) * (tau / d2) / 2.0
    elif tau < d2:
        rate = (tau - 0.5 * d1) / d2
    elif tau < min(d3, s12):
        up = 1.0 - tau - d3
        rate = 1.0 - up * up / q
    elif tau <= max(d3, s12):
        if d3 < s12:
            up = 1.0 - tau - d3
            over = tau - d3
            rate = 1.0 - (up * up + over * over) / q
        else:
            rate = 1.0
    elif tau <= d1 + d3:
        over = tau - d3
        rate = 1.0 - over * over / q
    elif tau <= d2 + d3:
        rate = ((1.0 - tau) - 0.5 * d1) / d2
    else:
        w = 1.0 - tau
        rate = (w / d1) * (w / d2) / 2.0
    return max(0.0, rate / d3)


dv3d_kernel = numba.njit(cache=True)(_dv3d_py)

_v2d_u = numba.vectorize(_SIG2, cache=True)(_v2d_py)
_v3d_u = numba.vectorize(_SIG3, cache=True)(_v3d_py)
_dv2d_u = numba.vectorize(_SIG2, cache=True)(_dv2d_py)
_dv3d_u = numba.vectorize(_SIG3, cache=True)(_dv3d_py)


def _as_d(d, n: int | None = None, check: bool = True) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.ndim == 0:
        raise ContractViolation("d must be a vector")
    if n is not None and d.shape[-1] != n:
        raise ContractViolation(f"expected {n} fractional increases, got {d.shape[-1]}")
    if check:
        if np.any(d < 0):
            raise ContractViolation("fractional increases must be non-negative")
        if np.any(np.diff(d, axis=-1) < 0):
            raise ContractViolation("fractional increases must be sorted ascending")
        if np.any(np.abs(d.sum(axis=-1) - 1.0) > NORM_TOL):
            raise ContractViolation("fractional increases must sum to 1")
    return d


def _out(value):
    return float(value) if np.ndim(value) == 0 else value


def v1d(tau):
    """Fractional length of a 1D cell: ``tau`` clamped to ``[0, 1]``."""
    return _out(np.clip(np.asarray(tau, dtype=float), 0.0, 1.0))


def v2d(tau, d, check: bool = True):
    """Fractional area of the unit square below the line ``z . d = tau``."""
    d = _as_d(d, 2, check)
    return _out(_v2d_u(tau, d[..., 0], d[..., 1]))


def v3d(tau, d, check: bool = True):
    """Fractional volume of the unit cube below the plane ``z . d = tau``.

    Entries of ``d`` below ``ZERO_TOL`` reduce the problem to 2D (or 1D).
    The 4a/4b split is decided by whether ``d3 < d1 + d2``.
    """
    d = _as_d(d, 3, check)
    return _out(_v3d_u(tau, d[..., 0], d[..., 1], d[..., 2]))


FOLD_REL = 0.05


def _simplex_sum(tau: float, d: list[float]) -> float:
    """Inclusion-exclusion for positive, ascending ``d`` (any sum)."""
    n = len(d)
    total = tau**n

    def spill(start: int, depth: int, covered: float):
        nonlocal total
        for k in range(start, n):
            s = covered + d[k]
            if s >= tau:
                break  # ascending order: every later index overshoots too
            total += (-1) ** (depth + 1) * (tau - s) ** n
            if depth + 1 < n - 1:
                spill(k + 1, depth + 1, s)

    spill(0, 0, 0.0)
    return total / (factorial(n) * prod(d))


def _cube_fraction(tau: float, d: list[float]) -> float:
    n = len(d)
    width = sum(d)
    if tau <= 0.0:
        return 0.0
    if tau >= width:
        return 1.0
    if n == 1:
        return tau / d[0]
    if d[0] >= FOLD_REL * width:
        return min(1.0, max(0.0, _simplex_sum(tau, d)))
    # A relatively small increase makes the alternating sum cancel badly.
    # Average the (n-1)-dimensional fraction over that axis instead; the
    # integrand is polynomial of degree n-1 between the breakpoints.
    eps, rest = d[0], d[1:]
    cuts = {0.0, eps}
    for m in range(len(rest) + 1):
        for subset in combinations(rest, m):
            t = tau - sum(subset)
            if 0.0 < t < eps:
                cuts.add(t)
    cuts = sorted(cuts)
    nodes, weights = np.polynomial.legendre.leggauss((n + 1) // 2)
    acc = 0.0
    for a, b in zip(cuts, cuts[1:]):
        half, mid = 0.5 * (b - a), 0.5 * (a + b)
        acc += half * sum(w * _cube_fraction(tau - (mid + half * x), rest) for x, w in zip(nodes, weights))
    return min(1.0, max(0.0, acc / eps))


def vnd(tau: float, d, check: bool = True) -> float:
    """Fractional volume in any dimension by inclusion-exclusion.

    Starts from the corner simplex ``tau^n / (n! prod d)`` and alternately
    subtracts and adds the spillover simplices of every index tuple whose
    summed increases ``tau`` exceeds. Zero entries of ``d`` are dropped first,
    lowering the dimension. An entry below ``FOLD_REL`` of the total is
    integrated out exactly (Gauss-Legendre between breakpoints) before the
    alternating sum, which would otherwise lose all precision. Scalar
    ``tau`` only.
    """
    d = _as_d(d, None, check)
    if d.ndim != 1:
        raise ContractViolation("vnd takes a single d vector")
    reduced = [float(x) for x in d if x >= ZERO_TOL]
    if not reduced:
        raise ContractViolation("all fractional increases are zero (degenerate cell)")
    tau = float(tau)
    if tau <= 0.0:
        return 0.0
    if tau >= 1.0:
        return 1.0
    return _cube_fraction(tau, reduced)


def fractional_volume(tau, d, check: bool = True):
    """Closed form for n <= 3, :func:`vnd` elementwise beyond."""
    d = _as_d(d, None, check)
    n = d.shape[-1]
    if n == 1:
        return v1d(tau)
    if n == 2:
        return v2d(tau, d, check=False)
    if n == 3:
        return v3d(tau, d, check=False)
    tau_b, d_b = np.broadcast_arrays(np.asarray(tau, dtype=float)[..., None], d)
    flat = zip(tau_b[..., 0].ravel(), d_b.reshape(-1, n))
    out = np.array([vnd(t, row, check=False) for t, row in flat]).reshape(tau_b.shape[:-1])
    return _out(out)


def dv1d(tau):
    return _out(np.where((np.asarray(tau) >= 0.0) & (np.asarray(tau) <= 1.0), 1.0, 0.0))


def dv2d(tau, d, check: bool = True):
    """``dv2d/dtau``; zero outside ``[0, 1]``."""
    d = _as_d(d, 2, check)
    return _out(_dv2d_u(tau, d[..., 0], d[..., 1]))


def dv3d(tau, d, check: bool = True):
    """``dv3d/dtau``; zero outside ``[0, 1]``."""
    d = _as_d(d, 3, check)
    return _out(_dv3d_u(tau, d[..., 0], d[..., 1], d[..., 2]))


def fractional_volume_rate(tau, d, check: bool = True):
    """Analytic ``dv/dtau`` for n <= 3."""
    d = _as_d(d, None, check)
    n = d.shape[-1]
    if n == 1:
        return dv1d(tau)
    if n == 2:
        return dv2d(tau, d, check=False)
    if n == 3:
        return dv3d(tau, d, check=False)
    raise NotImplementedError(f"no closed-form dv/dtau for n={n}")
