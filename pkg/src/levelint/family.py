"""Families of level-set integrals over a range of levels.

For every sample ``T`` of a :class:`LevelRange` this computes

* ``M(T)``: integral of ``h |grad psi|`` over the sublevel set ``psi < T``,
* ``m(T)``: integral of ``h`` over the level set ``psi = T`` (``dM/dT``),
* ``vol(T)``: volume of the sublevel set,

by summing exact per-cell contributions of the linear cell models. There
are three ways to visit the cells, all giving the same numbers:

``naive``
    every cell at every level (reference).
``general``
    cells leave the working list for good once they are full, their
    contribution folded into a running total.
``causal``
    a front grown from the cells below ``t_min`` through face neighbours.
    Only valid when every point reaches the ``t_min`` region along a path on
    which ``psi`` is monotone (distance functions, for instance). This is not
    checked; a violating field silently loses the unreachable regions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .cellgeom import CellArrays, CellClass, CellModel, build_cell_arrays, classify_cell
from .fracvol import dv2d_kernel, dv3d_kernel, fractional_volume, fractional_volume_rate, v2d_kernel, v3d_kernel
from .grid import ContractViolation, GradientField, ScalarField, estimate_gradient

METHODS = ("naive", "general", "causal")


@dataclass(frozen=True)
class LevelRange:
    """Levels ``t_min + k * dt`` for ``k = 0..n_steps`` (both ends included)."""

    t_min: float
    t_max: float
    n_steps: int

    def __post_init__(self):
        if not self.t_min < self.t_max:
            raise ContractViolation(f"need t_min < t_max, got [{self.t_min}, {self.t_max}]")
        if int(self.n_steps) < 1:
            raise ContractViolation("n_steps must be positive")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def dt(self) -> float:
        return (self.t_max - self.t_min) / self.n_steps

    def samples(self) -> np.ndarray:
        T = self.t_min + self.dt * np.arange(self.n_steps + 1)
        T[-1] = self.t_max
        return T


@dataclass
class TraversalStats:
    """Instrumentation filled in by the traversals."""

    visits: int = 0
    list_sizes: list[int] = field(default_factory=list)
    visited_counts: list[int] = field(default_factory=list)
    partial_counts: list[int] = field(default_factory=list)
    retained_counts: list[int] = field(default_factory=list)


@dataclass(frozen=True)
class LevelFamily:
    range: LevelRange
    M: np.ndarray
    m: np.ndarray
    vol: np.ndarray
    method: str = "naive"
    stats: TraversalStats | None = None

    @property
    def T(self) -> np.ndarray:
        return self.range.samples()


def cell_M_contribution(model: CellModel, h_i: float, spacing, T: float) -> float:
    """Integral of ``h_i |grad psi_i|`` over the part of the cell below ``T``."""
    scale = float(np.prod(spacing)) * h_i * model.grad_norm
    kind = classify_cell(model, T)
    if kind is CellClass.FULL:
        return scale
    if kind is CellClass.EMPTY:
        return 0.0
    tau = (T - model.min_psi) / model.total_increase
    return scale * fractional_volume(tau, model.d.d, check=False)


def cell_area_element(model: CellModel, spacing, T: float) -> float:
    """Measure of the ``T``-level set of the linear cell model inside the cell."""
    if model.degenerate or classify_cell(model, T) is not CellClass.PARTIAL:
        return 0.0
    tau = (T - model.min_psi) / model.total_increase
    rate = fractional_volume_rate(tau, model.d.d, check=False)
    return float(np.prod(spacing)) * model.grad_norm / model.total_increase * rate


class _Cells:
    """Flat per-cell arrays plus the data the contribution sums need."""

    def __init__(self, psi: ScalarField, h: ScalarField, grad: GradientField | None):
        if grad is None:
            grad = estimate_gradient(psi)
        if psi.spec != h.spec or psi.spec != grad.spec:
            raise ContractViolation("psi, h and grad must share one grid")
        n = psi.spec.ndim
        if n not in (2, 3):
            raise ContractViolation(f"level families are implemented for 2D and 3D, got {n}D")
        self.spec = psi.spec
        self.cell_volume = psi.spec.cell_volume
        arrays: CellArrays = build_cell_arrays(psi, grad)
        self.min_psi = arrays.min_psi
        self.max_psi = arrays.max_psi
        self.total = arrays.total_increase
        self.d = arrays.d
        h_flat = h.values.reshape(-1)
        # full-cell value of M_i, and the factor in front of dv/dtau for m_i
        self.full_M = self.cell_volume * h_flat * arrays.grad_norm
        with np.errstate(divide="ignore", invalid="ignore"):
            self.rate_scale = np.where(arrays.total_increase > 0, self.full_M / arrays.total_increase, 0.0)

    def partial_sums(self, idx: np.ndarray, T: float) -> tuple[float, float, float]:
        """(M, m, vol) summed over the strictly partial cells ``idx``."""
        if idx.size == 0:
            return 0.0, 0.0, 0.0
        tau = (T - self.min_psi[idx]) / self.total[idx]
        d = self.d[idx]
        v = fractional_volume(tau, d, check=False)
        rate = fractional_volume_rate(tau, d, check=False)
        return (
            float(np.sum(self.full_M[idx] * v)),
            float(np.sum(self.rate_scale[idx] * rate)),
            self.cell_volume * float(np.sum(v)),
        )


def _empty_outputs(rng: LevelRange):
    k = rng.n_steps + 1
    return np.zeros(k), np.zeros(k), np.zeros(k)


def compute_family_naive(psi: ScalarField, h: ScalarField, grad: GradientField | None, range: LevelRange) -> LevelFamily:
    """Sum every cell at every level. Reference for the faster traversals."""
    cells = _Cells(psi, h, grad)
    M, m, vol = _empty_outputs(range)
    stats = TraversalStats()
    for k, T in enumerate(range.samples()):
        full = cells.max_psi <= T
        partial = np.flatnonzero((cells.min_psi < T) & ~full)
        pM, pm, pv = cells.partial_sums(partial, T)
        M[k] = float(np.sum(cells.full_M[full])) + pM
        m[k] = pm
        vol[k] = cells.cell_volume * np.count_nonzero(full) + pv
        stats.visits += len(cells.min_psi)
        stats.list_sizes.append(len(cells.min_psi))
        stats.partial_counts.append(partial.size)
        stats.retained_counts.append(len(cells.min_psi))
    return LevelFamily(range, M, m, vol, "naive", stats)


@numba.njit(cache=True)
def _tree_sum(a, n):
    """Blocked tree summation of ``a[:n]``."""
    block = 128
    if n <= block:
        s = 0.0
        for i in range(n):
            s += a[i]
        return s
    width = (n + block - 1) // block
    level = np.empty(width)
    for b in range(width):
        s = 0.0
        for i in range(b * block, min(n, (b + 1) * block)):
            s += a[i]
        level[b] = s
    while width > block:
        nxt = (width + block - 1) // block
        for b in range(nxt):
            s = 0.0
            for i in range(b * block, min(width, (b + 1) * block)):
                s += level[i]
            level[b] = s
        width = nxt
    s = 0.0
    for i in range(width):
        s += level[i]
    return s


@numba.njit(cache=True)
def _kernels(tau, d, i, ndim):
    if ndim == 2:
        return v2d_kernel(tau, d[i, 0], d[i, 1]), dv2d_kernel(tau, d[i, 0], d[i, 1])
    return v3d_kernel(tau, d[i, 0], d[i, 1], d[i, 2]), dv3d_kernel(tau, d[i, 0], d[i, 1], d[i, 2])


@numba.njit(cache=True)
def _general_loop(Ts, lo, hi, total, d, full_M, rate_scale, cell_volume, M, m, vol, list_sizes, partial_counts, retained):
    N = lo.size
    ndim = d.shape[1]
    notfull = np.arange(N)
    count = N
    buf_M = np.empty(N)
    buf_m = np.empty(N)
    buf_v = np.empty(N)
    buf_full = np.empty(N)
    M_full = 0.0
    vol_full = 0.0
    visits = 0
    for k in range(Ts.size):
        T = Ts[k]
        keep = 0
        n_part = 0
        n_full = 0
        for r in range(count):
            i = notfull[r]
            if hi[i] <= T:
                buf_full[n_full] = full_M[i]
                n_full += 1
                continue
            notfull[keep] = i
            keep += 1
            if lo[i] < T:
                tau = (T - lo[i]) / total[i]
                v, rate = _kernels(tau, d, i, ndim)
                buf_M[n_part] = full_M[i] * v
                buf_m[n_part] = rate_scale[i] * rate
                buf_v[n_part] = v
                n_part += 1
        visits += count
        list_sizes[k] = count
        retained[k] = keep
        count = keep
        M_full += _tree_sum(buf_full, n_full)
        vol_full += cell_volume * n_full
        M[k] = M_full + _tree_sum(buf_M, n_part)
        m[k] = _tree_sum(buf_m, n_part)
        vol[k] = vol_full + cell_volume * _tree_sum(buf_v, n_part)
        partial_counts[k] = n_part
    return visits


def compute_family_general(psi: ScalarField, h: ScalarField, grad: GradientField | None, range: LevelRange) -> LevelFamily:
    """Working list of not-full cells; cells that fill up are retired into running totals."""
    cells = _Cells(psi, h, grad)
    M, m, vol = _empty_outputs(range)
    k = range.n_steps + 1
    list_sizes = np.zeros(k, dtype=np.int64)
    partial_counts = np.zeros(k, dtype=np.int64)
    retained = np.zeros(k, dtype=np.int64)
    visits = _general_loop(
        range.samples(), cells.min_psi, cells.max_psi, cells.total, cells.d,
        cells.full_M, cells.rate_scale, cells.cell_volume, M, m, vol, list_sizes, partial_counts, retained,
    )
    stats = TraversalStats(int(visits), list_sizes.tolist(), [], partial_counts.tolist(), retained.tolist())
    return LevelFamily(range, M, m, vol, "general", stats)


def _strides(dims) -> np.ndarray:
    return np.array([int(np.prod(dims[k + 1:])) for k in range(len(dims))], dtype=np.int64)


@numba.njit(cache=True)
def _causal_loop(Ts, lo, hi, total, d, full_M, rate_scale, cell_volume, dims, strides, seeds,
                 M, m, vol, list_sizes, visited_counts, partial_counts, retained):
    N = lo.size
    ndim = d.shape[1]
    visited = np.zeros(N, dtype=np.bool_)
    listed = np.empty(N, dtype=np.int64)
    count = seeds.size
    for s in range(count):
        listed[s] = seeds[s]
        visited[seeds[s]] = True
    n_visited = count
    buf_M = np.empty(N)
    buf_m = np.empty(N)
    buf_v = np.empty(N)
    buf_full = np.empty(N)
    M_full = 0.0
    vol_full = 0.0
    visits = 0
    for k in range(Ts.size):
        T = Ts[k]
        end = count
        r = 0
        keep = 0
        n_part = 0
        n_full = 0
        # the list grows while it is scanned; retained entries are compacted
        # to the front, which never overtakes the read position
        while r < end:
            i = listed[r]
            r += 1
            full = hi[i] <= T
            for axis in range(ndim):
                stride = strides[axis]
                c = (i // stride) % dims[axis]
                if c > 0:
                    j = i - stride
                    if not visited[j] and (full or lo[j] < T):
                        visited[j] = True
                        listed[end] = j
                        end += 1
                if c < dims[axis] - 1:
                    j = i + stride
                    if not visited[j] and (full or lo[j] < T):
                        visited[j] = True
                        listed[end] = j
                        end += 1
            if full:
                buf_full[n_full] = full_M[i]
                n_full += 1
                continue
            listed[keep] = i
            keep += 1
            if lo[i] < T:
                tau = (T - lo[i]) / total[i]
                v, rate = _kernels(tau, d, i, ndim)
                buf_M[n_part] = full_M[i] * v
                buf_m[n_part] = rate_scale[i] * rate
                buf_v[n_part] = v
                n_part += 1
        n_visited += end - count
        visits += end
        list_sizes[k] = end
        visited_counts[k] = n_visited
        retained[k] = keep
        count = keep
        M_full += _tree_sum(buf_full, n_full)
        vol_full += cell_volume * n_full
        M[k] = M_full + _tree_sum(buf_M, n_part)
        m[k] = _tree_sum(buf_m, n_part)
        vol[k] = vol_full + cell_volume * _tree_sum(buf_v, n_part)
        partial_counts[k] = n_part
    return visits


def compute_family_causal(psi: ScalarField, h: ScalarField, grad: GradientField | None, range: LevelRange) -> LevelFamily:
    """Front-advancing traversal for fields with monotone paths to the ``t_min`` region.

    The working list starts with every cell whose minimum lies below
    ``t_min`` (or, if there is none, the cell with the lowest minimum). At
    each level the list is scanned to its end while it grows: a listed cell
    appends each unvisited face neighbour whose minimum is below ``T``, and
    a listed cell that has become full appends all of its unvisited
    neighbours before it is retired.
    """
    cells = _Cells(psi, h, grad)
    dims = np.array(cells.spec.dims, dtype=np.int64)
    seeds = np.flatnonzero(cells.min_psi < range.t_min).astype(np.int64)
    if seeds.size == 0:
        seeds = np.array([int(np.argmin(cells.min_psi))], dtype=np.int64)
    M, m, vol = _empty_outputs(range)
    k = range.n_steps + 1
    list_sizes = np.zeros(k, dtype=np.int64)
    visited_counts = np.zeros(k, dtype=np.int64)
    partial_counts = np.zeros(k, dtype=np.int64)
    retained = np.zeros(k, dtype=np.int64)
    visits = _causal_loop(
        range.samples(), cells.min_psi, cells.max_psi, cells.total, cells.d,
        cells.full_M, cells.rate_scale, cells.cell_volume, dims, _strides(cells.spec.dims), seeds,
        M, m, vol, list_sizes, visited_counts, partial_counts, retained,
    )
    stats = TraversalStats(
        int(visits), list_sizes.tolist(), visited_counts.tolist(), partial_counts.tolist(), retained.tolist()
    )
    return LevelFamily(range, M, m, vol, "causal", stats)


_COMPUTE = {
    "naive": compute_family_naive,
    "general": compute_family_general,
    "causal": compute_family_causal,
}


def compute_family(psi: ScalarField, h: ScalarField | None, range: LevelRange, method: str = "general", grad: GradientField | None = None) -> LevelFamily:
    """Front door for the traversals. ``h=None`` integrates the constant 1."""
    if method not in _COMPUTE:
        raise ContractViolation(f"unknown method {method!r}, expected one of {METHODS}")
    if h is None:
        h = ScalarField(psi.spec, np.ones(psi.spec.dims))
    return _COMPUTE[method](psi, h, grad, range)


def differentiate_family(M_values, dt: float) -> np.ndarray:
    """Forward differences of ``M``; the last sample repeats the backward difference."""
    M_values = np.asarray(M_values, dtype=float)
    if M_values.ndim != 1 or M_values.size < 2:
        raise ContractViolation("need at least two samples of M")
    if not dt > 0:
        raise ContractViolation("dt must be positive")
    diff = np.diff(M_values) / dt
    return np.append(diff, diff[-1])


def mean_intensity_profile(
    I: ScalarField,
    psi: ScalarField,
    grad: GradientField | None,
    range: LevelRange,
    method: str = "causal",
) -> np.ndarray:
    """Mean of ``I`` along each level set: ``m_I(T) / m_1(T)``.

    Levels whose length ``m_1(T)`` is below ``1e-12 * cell volume`` have no
    meaningful mean and come back as NaN.
    """
    if grad is None:
        grad = estimate_gradient(psi)
    ones = ScalarField(psi.spec, np.ones(psi.spec.dims))
    m_I = compute_family(psi, I, range, method, grad).m
    m_1 = compute_family(psi, ones, range, method, grad).m
    defined = m_1 >= 1e-12 * psi.spec.cell_volume
    out = np.full(m_1.shape, np.nan)
    out[defined] = m_I[defined] / m_1[defined]
    return out
