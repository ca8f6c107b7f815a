"""Explicit isocontour integration in 2D (marching squares).

Each square between four neighbouring grid points contributes up to two
segments whose endpoints are found by linear interpolation along the square's
edges. A corner whose value equals ``T`` counts as below the level. Saddle
squares, where diagonal corners agree, are split according to the average of
the four corners. The same vertex classification is used when integrating a
function over the segments with the midpoint rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .grid import ContractViolation, ScalarField


@dataclass(frozen=True)
class SegmentSoup:
    """Unconnected isocontour segments, shape ``(k, 2, 2)`` (segment, endpoint, xy)."""

    segments: np.ndarray
    T: float

    def __len__(self):
        return self.segments.shape[0]

    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.segments[:, 1] - self.segments[:, 0], axis=1)

    def total_length(self) -> float:
        return float(np.sum(self.lengths()))

    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.segments[:, 0] + self.segments[:, 1])


@numba.njit(cache=True)
def _march(values, T, x0, y0, dx, dy, out):
    nx, ny = values.shape
    cx = np.empty(4)
    cy = np.empty(4)
    cv = np.empty(4)
    ex = np.empty(4)
    ey = np.empty(4)
    crossed = np.empty(4, dtype=np.bool_)
    count = 0
    for i in range(nx - 1):
        for j in range(ny - 1):
            # corners in loop order; edge k joins corner k and corner k+1
            cv[0] = values[i, j]
            cv[1] = values[i + 1, j]
            cv[2] = values[i + 1, j + 1]
            cv[3] = values[i, j + 1]
            n_above = 0
            for k in range(4):
                if cv[k] > T:
                    n_above += 1
            if n_above == 0 or n_above == 4:
                continue
            xa = x0 + i * dx
            ya = y0 + j * dy
            cx[0] = xa
            cy[0] = ya
            cx[1] = xa + dx
            cy[1] = ya
            cx[2] = xa + dx
            cy[2] = ya + dy
            cx[3] = xa
            cy[3] = ya + dy
            for k in range(4):
                a = k
                b = (k + 1) % 4
                crossed[k] = (cv[a] > T) != (cv[b] > T)
                if crossed[k]:
                    t = (T - cv[a]) / (cv[b] - cv[a])
                    ex[k] = cx[a] + t * (cx[b] - cx[a])
                    ey[k] = cy[a] + t * (cy[b] - cy[a])
            saddle = n_above == 2 and crossed[0] and crossed[1] and crossed[2] and crossed[3]
            if saddle:
                center_above = 0.25 * (cv[0] + cv[1] + cv[2] + cv[3]) > T
                for k in range(4):
                    if (cv[k] > T) != center_above:
                        e_in = (k + 3) % 4
                        if ex[e_in] != ex[k] or ey[e_in] != ey[k]:
                            out[count, 0, 0] = ex[e_in]
                            out[count, 0, 1] = ey[e_in]
                            out[count, 1, 0] = ex[k]
                            out[count, 1, 1] = ey[k]
                            count += 1
            else:
                first = -1
                for k in range(4):
                    if crossed[k]:
                        if first < 0:
                            first = k
                        else:
                            if ex[first] != ex[k] or ey[first] != ey[k]:
                                out[count, 0, 0] = ex[first]
                                out[count, 0, 1] = ey[first]
                                out[count, 1, 0] = ex[k]
                                out[count, 1, 1] = ey[k]
                                count += 1
                            break
    return count


def extract_isocontour(psi: ScalarField, T: float) -> SegmentSoup:
    """Marching-squares segments of the ``T``-level set of a 2D field."""
    spec = psi.spec
    if spec.ndim != 2:
        raise ContractViolation(f"marching squares needs a 2D field, got {spec.ndim}D")
    nx, ny = spec.dims
    out = np.empty((2 * (nx - 1) * (ny - 1), 2, 2))
    count = _march(np.ascontiguousarray(psi.values), float(T), *spec.origin, *spec.spacing, out)
    return SegmentSoup(out[:count].copy(), float(T))


def integrate_over_segments(soup: SegmentSoup, h: ScalarField) -> float:
    """Midpoint rule: sum of segment length times bilinear ``h`` at the midpoint."""
    if len(soup) == 0:
        return 0.0
    interp = RegularGridInterpolator(h.spec.axes(), h.values, method="linear", bounds_error=True)
    try:
        values = interp(soup.midpoints())
    except ValueError as exc:
        raise ContractViolation(f"segment midpoint outside the grid of h: {exc}") from exc
    return float(np.sum(soup.lengths() * values))


def integrate_levels(psi: ScalarField, h: ScalarField, levels) -> np.ndarray:
    """One explicit extraction and integration per level, in sequence."""
    return np.array([integrate_over_segments(extract_isocontour(psi, T), h) for T in levels])
