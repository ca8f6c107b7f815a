"""Uniform Cartesian grids, sampled scalar fields and analytic test fields.

Grid point ``i`` (a multi-index) sits at ``origin + i * spacing``. Each grid
point owns the axis-aligned cell of edge lengths ``spacing`` centred on it.
Field values are stored as an ``ndarray`` of shape ``dims`` so that axis
``k`` of the array runs along coordinate ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ContractViolation(ValueError):
    """Raised when an input breaks a documented precondition."""


@dataclass(frozen=True)
class GridSpec:
    """Shape, spacing and origin of a uniform Cartesian grid."""

    dims: tuple[int, ...]
    spacing: tuple[float, ...]
    origin: tuple[float, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        spacing = tuple(float(h) for h in self.spacing)
        origin = tuple(float(o) for o in self.origin)
        if not (len(dims) == len(spacing) == len(origin)) or not dims:
            raise ContractViolation("dims, spacing and origin must have one entry per axis")
        if any(n < 2 for n in dims):
            raise ContractViolation(f"every axis needs at least 2 points, got dims={dims}")
        if any(not (h > 0 and np.isfinite(h)) for h in spacing):
            raise ContractViolation(f"spacing must be positive, got {spacing}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def domain_volume(self) -> float:
        """Total volume covered by all cells (``dims * spacing`` per axis)."""
        return float(np.prod([n * h for n, h in zip(self.dims, self.spacing)]))

    def axes(self) -> list[np.ndarray]:
        """1D coordinate arrays, one per axis."""
        return [o + h * np.arange(n) for n, h, o in zip(self.dims, self.spacing, self.origin)]

    def coordinates(self) -> list[np.ndarray]:
        """Coordinate arrays of shape ``dims`` (``indexing='ij'``)."""
        return np.meshgrid(*self.axes(), indexing="ij")

    def point(self, index: Sequence[int]) -> np.ndarray:
        return np.asarray(self.origin) + np.asarray(index) * np.asarray(self.spacing)

    @classmethod
    def from_bounds(cls, lo: Sequence[float], hi: Sequence[float], dx: float) -> "GridSpec":
        """Grid over ``[lo, hi]`` per axis, endpoints included, step exactly ``dx``.

        The interval lengths must be integer multiples of ``dx`` (up to
        round-off); the point count is ``round((hi - lo) / dx) + 1``.
        """
        lo = tuple(float(v) for v in lo)
        hi = tuple(float(v) for v in hi)
        dims = []
        for a, b in zip(lo, hi):
            steps = (b - a) / dx
            n = int(round(steps))
            if abs(steps - n) > 1e-9 * max(1.0, abs(steps)):
                raise ContractViolation(f"interval [{a}, {b}] is not a multiple of dx={dx}")
            dims.append(n + 1)
        return cls(tuple(dims), (dx,) * len(lo), lo)


@dataclass(frozen=True)
class ScalarField:
    """Real samples of a function on the points of a :class:`GridSpec`."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.size != self.spec.size:
            raise ContractViolation(
                f"got {values.size} values for a grid of {self.spec.size} points"
            )
        values = values.reshape(self.spec.dims)
        if not np.all(np.isfinite(values)):
            raise ContractViolation("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __getitem__(self, index):
        return self.values[index]


@dataclass(frozen=True)
class GradientField:
    """Gradient vectors per grid point, stored with a trailing axis of length n."""

    spec: GridSpec
    vectors: np.ndarray

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=float)
        n = self.spec.ndim
        if vectors.size != self.spec.size * n:
            raise ContractViolation(
                f"got {vectors.size} components for {self.spec.size} points in {n}D"
            )
        vectors = vectors.reshape(self.spec.dims + (n,))
        if not np.all(np.isfinite(vectors)):
            raise ContractViolation("gradient components must be finite")
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)


def _require_ndim(spec: GridSpec, n: int, what: str):
    if spec.ndim != n:
        raise ContractViolation(f"{what} needs a {n}D grid, got {spec.ndim}D")


def _quadric(spec: GridSpec, center, semi_axes) -> np.ndarray:
    center = np.asarray(center, dtype=float)
    semi_axes = np.asarray(semi_axes, dtype=float)
    if np.any(semi_axes <= 0):
        raise ContractViolation(f"semi-axes must be positive, got {semi_axes}")
    total = -np.ones(spec.dims)
    for x, c, a in zip(spec.coordinates(), center, semi_axes):
        total += ((x - c) / a) ** 2
    return total


def make_ellipse_field(spec: GridSpec, center, semi_axes) -> ScalarField:
    """Samples of ``((x-cx)/a)^2 + ((y-cy)/b)^2 - 1``."""
    _require_ndim(spec, 2, "make_ellipse_field")
    return ScalarField(spec, _quadric(spec, center, semi_axes))


def make_ellipsoid_field(spec: GridSpec, center, semi_axes) -> ScalarField:
    """Samples of ``sum_k ((x_k - c_k)/a_k)^2 - 1`` in 3D."""
    _require_ndim(spec, 3, "make_ellipsoid_field")
    return ScalarField(spec, _quadric(spec, center, semi_axes))


def make_circle_sdf(spec: GridSpec, center, radius: float, squared: bool = False) -> ScalarField:
    """Circle level-set field.

    With ``squared=True`` the samples are ``|x-c|^2 - r^2``, otherwise the
    signed distance ``|x-c| - r``.
    """
    _require_ndim(spec, 2, "make_circle_sdf")
    return make_sphere_sdf(spec, center, radius, squared)


def make_sphere_sdf(spec: GridSpec, center, radius: float, squared: bool = False) -> ScalarField:
    """n-dimensional analogue of :func:`make_circle_sdf`."""
    if not radius > 0:
        raise ContractViolation(f"radius must be positive, got {radius}")
    center = np.asarray(center, dtype=float)
    if center.shape != (spec.ndim,):
        raise ContractViolation(f"center must have {spec.ndim} components")
    r2 = np.zeros(spec.dims)
    for x, c in zip(spec.coordinates(), center):
        r2 += (x - c) ** 2
    values = r2 - radius**2 if squared else np.sqrt(r2) - radius
    return ScalarField(spec, values)


def estimate_gradient(psi: ScalarField) -> GradientField:
    """Central differences inside, first-order one-sided differences on the boundary."""
    spec = psi.spec
    parts = np.gradient(psi.values, *spec.spacing, edge_order=1)
    if spec.ndim == 1:
        parts = [parts]
    return GradientField(spec, np.stack(parts, axis=-1))
