"""Per-cell linear models of the level-set function.

Inside the cell centred on grid point ``x_i`` the field is replaced by
``psi_i(x) = psi(x_i) + (x - x_i) . grad psi(x_i)``. Its extremes sit at
opposite vertices, and the per-axis increases ``|dx * grad|`` (sorted and
L1-normalized) are what the fractional-volume kernels consume.

:func:`build_cell_model` handles one cell; :func:`build_cell_arrays` does the
same for every grid point at once and is what the traversals use.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .fracvol import ZERO_TOL
from .grid import ContractViolation, GradientField, ScalarField


class CellClass(enum.Enum):
    FULL = "full"
    PARTIAL = "partial"
    EMPTY = "empty"


@dataclass(frozen=True)
class FractionalIncreases:
    """Ascending, L1-normalized per-axis increases and how many are (near) zero."""

    d: np.ndarray
    n_zero: int


@dataclass(frozen=True)
class CellModel:
    psi_center: float
    min_psi: float
    max_psi: float
    grad_norm: float
    total_increase: float
    d: FractionalIncreases

    @property
    def degenerate(self) -> bool:
        return self.total_increase == 0.0


def _increases(grad, spacing):
    increases = np.abs(np.asarray(spacing, dtype=float) * np.asarray(grad, dtype=float))
    total = increases.sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.sort(increases, axis=-1) / total[..., None]
    d = np.where(total[..., None] > 0, d, 0.0)
    return total, d


def build_cell_model(psi_center: float, grad, spacing) -> CellModel:
    """Linear model of one cell from its centre value and gradient estimate."""
    grad = np.asarray(grad, dtype=float)
    spacing = np.asarray(spacing, dtype=float)
    if grad.shape != spacing.shape or grad.ndim != 1:
        raise ContractViolation("grad and spacing must be vectors of equal length")
    if np.any(spacing <= 0):
        raise ContractViolation("spacing must be positive")
    if not np.all(np.isfinite(grad)):
        raise ContractViolation("gradient must be finite")
    total, d = _increases(grad, spacing)
    total = float(total)
    n_zero = int(np.count_nonzero(d < ZERO_TOL))
    d.setflags(write=False)
    return CellModel(
        psi_center=float(psi_center),
        min_psi=float(psi_center) - 0.5 * total,
        max_psi=float(psi_center) + 0.5 * total,
        grad_norm=float(np.linalg.norm(grad)),
        total_increase=total,
        d=FractionalIncreases(d, n_zero),
    )


def sign_vector(grad) -> np.ndarray:
    """Elementwise sign with zeros mapped to +1."""
    return np.where(np.asarray(grad, dtype=float) < 0, -1.0, 1.0)


def extremal_vertices(center, grad, spacing) -> tuple[np.ndarray, np.ndarray]:
    """Minimal and maximal vertex of the cell centred on ``center``."""
    half = 0.5 * np.asarray(spacing, dtype=float) * sign_vector(grad)
    center = np.asarray(center, dtype=float)
    return center - half, center + half


def classify_cell(model: CellModel, T: float) -> CellClass:
    """Full if ``max_psi <= T``, empty if ``min_psi >= T``, partial otherwise.

    A constant cell is full when its value is ``<= T`` and empty otherwise.
    """
    if model.degenerate:
        return CellClass.FULL if model.psi_center <= T else CellClass.EMPTY
    if model.max_psi <= T:
        return CellClass.FULL
    if model.min_psi >= T:
        return CellClass.EMPTY
    return CellClass.PARTIAL


@dataclass(frozen=True)
class CellArrays:
    """Linear models of all cells of a grid, flattened in row-major order."""

    min_psi: np.ndarray
    max_psi: np.ndarray
    grad_norm: np.ndarray
    total_increase: np.ndarray
    d: np.ndarray
    psi_center: np.ndarray

    def __len__(self):
        return self.min_psi.shape[0]


def build_cell_arrays(psi: ScalarField, grad: GradientField) -> CellArrays:
    if psi.spec != grad.spec:
        raise ContractViolation("psi and grad must share one grid")
    n = psi.spec.ndim
    center = psi.values.reshape(-1)
    g = grad.vectors.reshape(-1, n)
    total, d = _increases(g, psi.spec.spacing)
    return CellArrays(
        min_psi=center - 0.5 * total,
        max_psi=center + 0.5 * total,
        grad_norm=np.sqrt(np.einsum("ij,ij->i", g, g)),
        total_increase=total,
        d=np.ascontiguousarray(d),
        psi_center=center,
    )
