"""Convergence studies, the family timing benchmark and the photo-geometric profile.

Trial translations come from :class:`XorShift64Star`, whose recurrence is
simple enough to reproduce in any language:

    x ^= x >> 12;  x ^= x << 25;  x ^= x >> 27   (64-bit state)
    output = x * 0x2545F4914F6CDD1D  (mod 2**64)
    uniform = (output >> 11) * 2**-53            (in [0, 1))

The state starts at ``seed ^ 0x9E3779B97F4A7C15`` (replaced by that constant
if the xor is zero). A trial centre takes ``ndim`` consecutive uniforms.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .baseline import integrate_levels, integrate_over_segments, extract_isocontour
from .family import LevelRange, compute_family, mean_intensity_profile
from .grid import (
    ContractViolation,
    GridSpec,
    ScalarField,
    make_circle_sdf,
    make_ellipse_field,
    make_ellipsoid_field,
)
from .io import load_caf, load_pgm

ELLIPSE_AXES = (1.5, 0.75)
ELLIPSE_LENGTH = 7.266336165
ELLIPSOID_AXES = (1.5, 0.75, 0.5)
ELLIPSOID_AREA = 9.901821
ELLIPSOID_VOLUME = 4.0 / 3.0 * math.pi * 1.5 * 0.75 * 0.5
DOMAIN = (-5.0, 5.0)

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MULT = 0x2545F4914F6CDD1D


class XorShift64Star:
    """Portable 64-bit xorshift* generator (recurrence in the module docstring)."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ContractViolation("seed must be non-negative")
        state = (int(seed) ^ _GOLDEN) & _MASK
        self.state = state or _GOLDEN

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        self.state = x
        return (x * _MULT) & _MASK

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53


@dataclass(frozen=True)
class TrialConfig:
    """Resolution sweep and trial set of a convergence study.

    With ``perturb=False`` every trial is centred at the origin.
    """

    resolutions: tuple[float, ...]
    n_trials: int = 50
    rng_seed: int = 0
    domain: tuple[float, float] = DOMAIN
    perturb: bool = True

    def __post_init__(self):
        res = tuple(float(r) for r in self.resolutions)
        if not res or any(not r > 0 for r in res):
            raise ContractViolation("resolutions must be positive")
        if any(b >= a for a, b in zip(res, res[1:])):
            raise ContractViolation(f"resolutions must be strictly decreasing, got {res}")
        if int(self.n_trials) < 1:
            raise ContractViolation("n_trials must be at least 1")
        if int(self.rng_seed) < 0:
            raise ContractViolation("rng_seed must be non-negative")
        lo, hi = (float(v) for v in self.domain)
        if not lo < hi:
            raise ContractViolation(f"empty domain {self.domain}")
        object.__setattr__(self, "resolutions", res)
        object.__setattr__(self, "n_trials", int(self.n_trials))
        object.__setattr__(self, "domain", (lo, hi))

    def centers(self, ndim: int) -> np.ndarray:
        """``(n_trials, ndim)`` centres, shared by every resolution of the sweep."""
        if not self.perturb:
            return np.zeros((self.n_trials, ndim))
        rng = XorShift64Star(self.rng_seed)
        return np.array([[rng.uniform() for _ in range(ndim)] for _ in range(self.n_trials)])


@dataclass(frozen=True)
class ConvergenceRow:
    dx: float
    avg_err: float
    sd_err: float
    min_err: float
    max_err: float
    order_avg: float
    order_min: float
    order_max: float
    max_min_ratio: float

    FIELDS = ("dx", "avg_err", "sd_err", "min_err", "max_err", "order_avg", "order_min", "order_max", "max_min_ratio")

    def values(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in self.FIELDS)


def convergence_order(errors: Sequence[float], dxs: Sequence[float]) -> np.ndarray:
    """``log2(E_k / E_k+1) / log2(dx_k / dx_k+1)``, with 0 for the first resolution."""
    errors = np.asarray(errors, dtype=float)
    dxs = np.asarray(dxs, dtype=float)
    if errors.shape != dxs.shape:
        raise ContractViolation("need one error per resolution")
    out = np.zeros(errors.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[1:] = np.log2(errors[:-1] / errors[1:]) / np.log2(dxs[:-1] / dxs[1:])
    return out


def fitted_order(errors: Sequence[float], dxs: Sequence[float]) -> float:
    """Least-squares slope of ``log E`` against ``log dx``."""
    return float(np.polyfit(np.log(dxs), np.log(errors), 1)[0])


def aggregate(dxs: Sequence[float], errors: Sequence[Sequence[float]]) -> list[ConvergenceRow]:
    """Per-resolution statistics of relative errors (one inner sequence per dx)."""
    errs = [np.asarray(e, dtype=float) for e in errors]
    avg = [float(np.mean(e)) for e in errs]
    lo = [float(np.min(e)) for e in errs]
    hi = [float(np.max(e)) for e in errs]
    o_avg, o_min, o_max = (convergence_order(x, dxs) for x in (avg, lo, hi))
    rows = []
    for k, dx in enumerate(dxs):
        sd = float(np.std(errs[k], ddof=1)) if errs[k].size > 1 else 0.0
        ratio = hi[k] / lo[k] if lo[k] > 0 else math.inf
        rows.append(ConvergenceRow(float(dx), avg[k], sd, lo[k], hi[k], o_avg[k], o_min[k], o_max[k], ratio))
    return rows


def window_spec(dx: float, center, semi_axes, domain=DOMAIN, margin: int = 5) -> GridSpec:
    """Sub-lattice of the full ``domain`` grid around an axis-aligned box.

    Points keep their full-grid positions ``domain[0] + i * dx``; only the
    index range is cut down to the box plus ``margin`` cells per side.
    """
    lo, hi = domain
    n_full = GridSpec.from_bounds((lo,), (hi,), dx).dims[0]
    counts, origin = [], []
    for c, a in zip(center, semi_axes):
        i0 = max(0, int(math.floor((c - a - lo) / dx)) - margin)
        i1 = min(n_full - 1, int(math.ceil((c + a - lo) / dx)) + margin)
        counts.append(i1 - i0 + 1)
        origin.append(lo + i0 * dx)
    return GridSpec(tuple(counts), (dx,) * len(counts), tuple(origin))


def _single_level(psi: ScalarField, dx: float, method: str):
    rng = LevelRange(-dx, 0.0, 1)
    fam = compute_family(psi, None, rng, method)
    return fam.m[1], fam.vol[1]


def ellipse_trial(dx: float, center, method: str = "general", crop: bool = True) -> float:
    """Relative arc-length error of the translated ellipse at one resolution."""
    spec = window_spec(dx, center, ELLIPSE_AXES) if crop else GridSpec.from_bounds((DOMAIN[0],) * 2, (DOMAIN[1],) * 2, dx)
    psi = make_ellipse_field(spec, center, ELLIPSE_AXES)
    if method == "baseline":
        length = integrate_over_segments(extract_isocontour(psi, 0.0), ScalarField(spec, np.ones(spec.dims)))
    else:
        length, _ = _single_level(psi, dx, method)
    return abs(length - ELLIPSE_LENGTH) / ELLIPSE_LENGTH


def ellipsoid_trial(dx: float, center, quantity: str = "area", method: str = "general", crop: bool = True) -> float:
    """Relative surface-area or volume error of the translated ellipsoid."""
    if method == "baseline":
        raise ContractViolation("the explicit baseline is 2D only")
    if quantity not in ("area", "volume"):
        raise ContractViolation(f"quantity must be 'area' or 'volume', got {quantity!r}")
    spec = window_spec(dx, center, ELLIPSOID_AXES) if crop else GridSpec.from_bounds((DOMAIN[0],) * 3, (DOMAIN[1],) * 3, dx)
    psi = make_ellipsoid_field(spec, center, ELLIPSOID_AXES)
    area, vol = _single_level(psi, dx, method)
    if quantity == "area":
        return abs(area - ELLIPSOID_AREA) / ELLIPSOID_AREA
    return abs(vol - ELLIPSOID_VOLUME) / ELLIPSOID_VOLUME


def _check_domain(config: TrialConfig):
    if config.domain != DOMAIN:
        raise ContractViolation(f"the ellipse experiments use the domain {DOMAIN}")


def run_ellipse2d(config: TrialConfig, method: str = "general") -> list[ConvergenceRow]:
    _check_domain(config)
    centers = config.centers(2)
    errors = [[ellipse_trial(dx, c, method) for c in centers] for dx in config.resolutions]
    return aggregate(config.resolutions, errors)


def run_ellipsoid3d(config: TrialConfig, quantity: str = "area", method: str = "general") -> list[ConvergenceRow]:
    """Area uses the configured trials; volume always uses one centred trial."""
    _check_domain(config)
    centers = config.centers(3) if quantity == "area" else np.zeros((1, 3))
    errors = [[ellipsoid_trial(dx, c, quantity, method) for c in centers] for dx in config.resolutions]
    return aggregate(config.resolutions, errors)


BENCH_FIELDS = ("nTs", "t_causal", "t_general", "t_baseline", "err_causal", "err_general", "err_baseline")
TIMING_FIELDS = ("t_causal", "t_general", "t_baseline")


@dataclass
class BenchmarkSetup:
    dx: float = 0.025
    t_min: float = -0.5
    t_max: float = 2.0
    repeats: int = 5
    psi: ScalarField = field(init=False)

    def __post_init__(self):
        if not -1.0 < self.t_min < self.t_max:
            raise ContractViolation("the circle levels need -1 < t_min < t_max")
        if self.repeats < 1:
            raise ContractViolation("repeats must be at least 1")
        spec = GridSpec.from_bounds((DOMAIN[0],) * 2, (DOMAIN[1],) * 2, self.dx)
        self.psi = make_circle_sdf(spec, (0.0, 0.0), 1.0, squared=True)

    def run(self, method: str, rng: LevelRange) -> np.ndarray:
        if method == "baseline":
            ones = ScalarField(self.psi.spec, np.ones(self.psi.spec.dims))
            return integrate_levels(self.psi, ones, rng.samples())
        return compute_family(self.psi, None, rng, method).m

    def time(self, method: str, rng: LevelRange) -> tuple[float, np.ndarray]:
        """Wall time in ms of one run, and the result."""
        start = time.perf_counter()
        values = self.run(method, rng)
        return 1e3 * (time.perf_counter() - start), values


def run_family_benchmark(nts_sweep: Sequence[int], setup: BenchmarkSetup | None = None) -> list[dict]:
    """Times the coupled traversals against one marching-squares pass per level.

    All three methods integrate the level circles of ``x^2 + y^2 - 1`` for
    ``nTs + 1`` levels; errors are mean relative deviations from
    ``2 pi sqrt(1 + T)``. One untimed warm-up run per method comes first.
    The sweep is repeated ``setup.repeats`` times and the fastest run of each
    configuration is kept, so a slow spell on a shared machine spreads over
    the whole sweep instead of landing on one level count.
    """
    setup = setup or BenchmarkSetup()
    sweep = [int(n) for n in nts_sweep]
    if not sweep or any(n < 1 for n in sweep):
        raise ContractViolation("nTs values must be positive")
    methods = ("causal", "general", "baseline")
    warm = LevelRange(setup.t_min, setup.t_max, sweep[0])
    for method in methods:
        setup.run(method, warm)
    rows = [{"nTs": n} for n in sweep]
    for _ in range(setup.repeats):
        for row in rows:
            rng = LevelRange(setup.t_min, setup.t_max, row["nTs"])
            for method in methods:
                elapsed, values = setup.time(method, rng)
                key = f"t_{method}"
                row[key] = min(elapsed, row.get(key, math.inf))
                if f"err_{method}" not in row:
                    exact = 2.0 * np.pi * np.sqrt(1.0 + rng.samples())
                    row[f"err_{method}"] = float(np.mean(np.abs(values - exact) / exact))
    return [{k: row[k] for k in BENCH_FIELDS} for row in rows]


PHOTO_FIELDS = ("T", "T_normalized", "f")


def load_field(path) -> ScalarField:
    """PGM or CAF1 file, chosen by extension."""
    text = str(path).lower()
    if text.endswith(".caf"):
        return load_caf(path)
    if text.endswith((".pgm", ".pnm")):
        return load_pgm(path)
    raise ContractViolation(f"unsupported field file {path} (expected .pgm or .caf)")


def analytic_psi(spec: GridSpec, source: str) -> ScalarField:
    """``circle:cx,cy,r`` gives the signed distance to that circle on ``spec``."""
    kind, _, args = source.partition(":")
    if kind != "circle":
        raise ContractViolation(f"unknown analytic level-set spec {source!r}")
    try:
        cx, cy, r = (float(v) for v in args.split(","))
    except ValueError as exc:
        raise ContractViolation(f"expected circle:cx,cy,r, got {source!r}") from exc
    return make_circle_sdf(spec, (cx, cy), r)


def photogeo_profile(image: ScalarField, psi: ScalarField, n_levels: int, method: str = "causal") -> np.ndarray:
    """Rows ``(T, T / |psi_min|, f(T))`` for ``n_levels + 1`` levels over ``[psi_min, 0]``."""
    if psi.spec.dims != image.spec.dims:
        raise ContractViolation(f"image {image.spec.dims} and level set {psi.spec.dims} differ in shape")
    if psi.spec != image.spec:
        psi = ScalarField(image.spec, psi.values)
    psi_min = float(np.min(psi.values))
    if not psi_min < 0:
        raise ContractViolation("the level-set function has no negative values")
    rng = LevelRange(psi_min, 0.0, n_levels)
    f = mean_intensity_profile(image, psi, None, rng, method)
    T = rng.samples()
    return np.column_stack([T, T / abs(psi_min), f])


def run_photogeo(image_path, psi_source: str, n_levels: int, method: str = "causal") -> np.ndarray:
    image = load_field(image_path)
    if ":" in str(psi_source) and not str(psi_source).lower().endswith((".caf", ".pgm", ".pnm")):
        psi = analytic_psi(image.spec, psi_source)
    else:
        psi = load_field(psi_source)
    return photogeo_profile(image, psi, n_levels, method)


def format_value(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.5e}"


def write_csv(stream, header: Sequence[str], rows) -> None:
    """Comma-separated, LF line endings, floats with 6 significant digits."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
