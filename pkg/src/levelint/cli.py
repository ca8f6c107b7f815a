"""Command-line harness for the convergence studies, the benchmark and the profile.

Exit status is 0 on success, 2 for configuration errors and 3 for I/O errors.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
from typing import Sequence

from . import experiments as ex
from .family import METHODS
from .grid import ContractViolation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

DEFAULT_DX = {
    "ellipse2d": "0.2,0.1,0.05,0.025",
    "area": "0.2,0.1,0.05",
    "volume": "0.1,0.05,0.025",
}


class ConfigError(Exception):
    pass


def _floats(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"not a comma-separated list of numbers: {text!r}") from exc
    if not values:
        raise ConfigError("empty list")
    return values


def _nts_list(text: str) -> list[int]:
    """``5,10,20`` or the inclusive range ``start:stop:step``."""
    try:
        if ":" in text:
            start, stop, step = (int(v) for v in text.split(":"))
            if step < 1:
                raise ConfigError("range step must be positive")
            return list(range(start, stop + 1, step))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad nTs list {text!r}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="levelint", description="Level-set integral families on Cartesian grids.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, trials: int | None):
        p.add_argument("--dx-list", help="comma-separated, strictly decreasing grid spacings")
        p.add_argument("--out", help="output CSV (default: stdout)")
        if trials is not None:
            p.add_argument("--trials", type=int, default=trials, help=f"random translations (default {trials})")
            p.add_argument("--seed", type=int, default=0, help="generator seed (default 0)")

    p = sub.add_parser("ellipse2d", help="arc length of a translated ellipse")
    common(p, 50)
    p.add_argument("--method", choices=METHODS + ("baseline",), default="general")

    p = sub.add_parser("ellipsoid3d", help="surface area or volume of a translated ellipsoid")
    common(p, 50)
    p.add_argument("--quantity", choices=("area", "volume"), default="area")
    p.add_argument("--method", choices=METHODS, default="general")

    p = sub.add_parser("family-bench", help="timing of coupled families against per-level marching squares")
    common(p, None)
    p.add_argument("--tmin", type=float, default=-0.5)
    p.add_argument("--tmax", type=float, default=2.0)
    p.add_argument("--nts", default="5:200:5", help="level counts: '5:200:5' or '5,10,20'")
    p.add_argument("--repeats", type=int, default=5, help="passes over the sweep; the fastest run is kept")

    p = sub.add_parser("photogeo", help="mean image intensity along the level contours")
    p.add_argument("--image", required=True, help="intensity image (.pgm or .caf)")
    p.add_argument("--psi", required=True, help="level-set file (.pgm or .caf) or 'circle:cx,cy,r'")
    p.add_argument("--nts", "--levels", dest="levels", type=int, default=100, help="level intervals over [psi_min, 0]")
    p.add_argument("--method", choices=METHODS, default="causal")
    p.add_argument("--out", help="output CSV (default: stdout)")
    return parser


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
        return
    try:
        fh = open(path, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    with fh:
        yield fh


def _convergence(args) -> tuple[Sequence[str], list]:
    key = args.command if args.command == "ellipse2d" else args.quantity
    dxs = _floats(args.dx_list or DEFAULT_DX[key])
    if args.trials < 1:
        raise ConfigError("--trials must be at least 1")
    if args.seed < 0:
        raise ConfigError("--seed must be non-negative")
    config = ex.TrialConfig(dxs, args.trials, args.seed)
    if args.command == "ellipse2d":
        rows = ex.run_ellipse2d(config, args.method)
    else:
        rows = ex.run_ellipsoid3d(config, args.quantity, args.method)
    return ex.ConvergenceRow.FIELDS, [r.values() for r in rows]


def _bench(args):
    dxs = _floats(args.dx_list or "0.025")
    if len(dxs) != 1:
        raise ConfigError("family-bench takes a single grid spacing")
    setup = ex.BenchmarkSetup(dxs[0], args.tmin, args.tmax, args.repeats)
    rows = ex.run_family_benchmark(_nts_list(args.nts), setup)
    return ex.BENCH_FIELDS, [[r[k] for k in ex.BENCH_FIELDS] for r in rows]


def _photogeo(args):
    if args.levels < 1:
        raise ConfigError("--nts must be positive")
    table = ex.run_photogeo(args.image, args.psi, args.levels, args.method)
    return ex.PHOTO_FIELDS, table.tolist()


_COMMANDS = {"ellipse2d": _convergence, "ellipsoid3d": _convergence, "family-bench": _bench, "photogeo": _photogeo}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        header, rows = _COMMANDS[args.command](args)
        with _output(args.out) as fh:
            ex.write_csv(fh, header, rows)
    except (ConfigError, ContractViolation) as exc:
        print(f"levelint: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"levelint: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # malformed input files surface as ValueError from the readers
        print(f"levelint: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
