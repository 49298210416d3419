"""Command-line harness: parameter sweeps, figure datasets, distance report.

Subcommands::

    catswap sweep [--config FILE] [--alpha-min ...] --output rows.csv
    catswap figure Fig6 --outdir data/
    catswap distance-report [--atten 0.149] [--upsilon 0.05]
    catswap oracle-check [--n-max 40]

Exit status is 0 on success, 2 for configuration errors and 3 when a
numerical invariant fails.  ``CATSWAP_THREADS`` caps the worker count.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import enum
import io
import itertools
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from . import __version__
from .fock_oracle import OracleConfig, oracle_run_es
from .metrics import (
    bell_state,
    fidelity,
    homodyne_success_probability,
    peak_fidelity,
    quadrature_distribution,
    trace_distance,
)
from .optics import QuadratureNodes
from .protocol import (
    GaussianLossSpec,
    Peak,
    ProtocolParams,
    distance_for_T,
    run_es_averaged,
    run_es_fixed,
)

log = logging.getLogger("catswap")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

COLUMNS = ["alpha", "T", "Upsilon", "dx", "peak", "F_plus", "F_minus", "p_vacuum", "p_homodyne"]
NA = "NA"


class ConfigError(ValueError):
    pass


class OutputFormat(enum.Enum):
    CSV = "csv"
    JSON = "json"


@dataclass
class SweepSpec:
    """Grid of protocol settings.

    ``Upsilon`` entries of 0 mean equal losses; ``dx`` entries of ``None``
    mean ideal homodyne detection.
    """

    alpha_min: float = 0.0
    alpha_max: float = 4.0
    alpha_steps: int = 161
    T: list[float] = field(default_factory=lambda: [1.0])
    Upsilon: list[float] = field(default_factory=lambda: [0.0])
    dx: list[float | None] = field(default_factory=lambda: [None])
    peak: Peak = Peak.PLUS
    fidelity: bool = True
    nodes: int = 32
    upsilon_nodes: int = 48
    output: str | None = None
    format: OutputFormat = OutputFormat.CSV

    def validate(self) -> SweepSpec:
        if self.alpha_steps < 2:
            raise ConfigError("alpha_steps: must be >= 2")
        if not 0.0 <= self.alpha_min <= self.alpha_max <= 6.0:
            raise ConfigError("alpha_min/alpha_max: need 0 <= alpha_min <= alpha_max <= 6")
        if not self.T or any(not 0.0 <= t <= 1.0 for t in self.T):
            raise ConfigError(f"T: values must lie in [0, 1], got {self.T}")
        for u in self.Upsilon:
            if u != 0.0 and not u > 1e-4:
                raise ConfigError(f"Upsilon: values must be 0 or > 1e-4, got {u}")
        for d in self.dx:
            if d is not None and not d > 0:
                raise ConfigError(f"dx: values must be positive or 'ideal', got {d}")
        if not 2 <= self.nodes <= 4096:
            raise ConfigError("nodes: must be in [2, 4096]")
        if self.upsilon_nodes < 8:
            raise ConfigError("upsilon_nodes: must be >= 8")
        return self

    def alphas(self) -> np.ndarray:
        return np.linspace(self.alpha_min, self.alpha_max, self.alpha_steps)

    def grid(self) -> list[tuple[float, float, float, float | None]]:
        """Grid points ``(T, Upsilon, dx, alpha)`` in output order."""
        return [
            (t, u, d, float(a))
            for t, u, d, a in itertools.product(self.T, self.Upsilon, self.dx, self.alphas())
        ]

    def as_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["peak"] = self.peak.value
        out["format"] = self.format.value
        return out


# -- config parsing -------------------------------------------------------------


def _parse_float(text: str) -> float:
    return float(text)


def _parse_dx(text: str) -> float | None:
    return None if text.strip().lower() in ("ideal", "na", "none") else float(text)


def _parse_list(parse):
    def inner(text: str):
        return [parse(p) for p in text.split(",") if p.strip()]

    return inner


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_FIELD_PARSERS = {
    "alpha_min": _parse_float,
    "alpha_max": _parse_float,
    "alpha_steps": int,
    "T": _parse_list(_parse_float),
    "Upsilon": _parse_list(_parse_float),
    "dx": _parse_list(_parse_dx),
    "peak": lambda t: Peak(t.strip().lower()),
    "fidelity": _parse_bool,
    "nodes": int,
    "upsilon_nodes": int,
    "output": str,
    "format": lambda t: OutputFormat(t.strip().lower()),
}


def parse_config_text(text: str, base: SweepSpec | None = None) -> SweepSpec:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in _FIELD_PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _FIELD_PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    spec = dataclasses.replace(base or SweepSpec(), **values)
    return spec.validate()


def load_config(path: str | os.PathLike) -> SweepSpec:
    """Read a flat ``key=value`` sweep configuration."""
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


# -- sweep engine ------------------------------------------------------------------


def _workers() -> int:
    env = os.environ.get("CATSWAP_THREADS")
    n = os.cpu_count() or 1
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            raise ConfigError(f"CATSWAP_THREADS must be an integer, got {env!r}") from None
    return n


def _evaluate(point, spec: SweepSpec) -> dict:
    T, Ups, dx, alpha = point
    params = ProtocolParams(
        alpha=alpha, T=T, dx=dx, peak=spec.peak, nodes=QuadratureNodes(spec.nodes)
    )
    loss = GaussianLossSpec(Ups, node_count=spec.upsilon_nodes) if Ups > 0 else None
    out = run_es_fixed(params) if loss is None else run_es_averaged(params, loss)
    out.rho.check()
    row = {
        "alpha": alpha,
        "T": T,
        "Upsilon": Ups if loss is not None else None,
        "dx": dx,
        "peak": spec.peak.value,
        "F_plus": None,
        "F_minus": None,
        "p_vacuum": out.p_vacuum,
        "p_homodyne": None,
    }
    if spec.fidelity:
        row["F_plus"] = fidelity(out.rho, bell_state(alpha, +1))
        row["F_minus"] = fidelity(out.rho, bell_state(alpha, -1))
    if dx is not None:
        row["p_homodyne"] = (
            out.p_homodyne if spec.peak is Peak.BOTH else homodyne_success_probability(params, loss)
        )
    for key in ("p_vacuum", "p_homodyne"):
        p = row[key]
        if p is not None and not -1e-12 <= p <= 1.0 + 1e-9:
            raise ArithmeticError(f"{key}={p} outside [0, 1] at {point}")
    return row


def _evaluate_chunk(args) -> list[dict]:
    points, spec = args
    return [_evaluate(p, spec) for p in points]


def run_sweep(spec: SweepSpec, workers: int | None = None) -> list[dict]:
    """One row per grid point, ordered by (T, Upsilon, dx, alpha)."""
    spec.validate()
    points = spec.grid()
    workers = _workers() if workers is None else workers
    if workers <= 1 or len(points) < 8:
        return [_evaluate(p, spec) for p in points]
    size = max(1, math.ceil(len(points) / (4 * workers)))
    chunks = [(points[i : i + size], spec) for i in range(0, len(points), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map() yields in submission order, so rows keep grid order
        return [row for chunk in pool.map(_evaluate_chunk, chunks) for row in chunk]


def format_value(v) -> str:
    if v is None:
        return NA
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def rows_to_csv(rows: list[dict], columns: list[str] = COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c)) for c in columns])
    return buf.getvalue()


def write_rows(rows: list[dict], path: str | os.PathLike, fmt: OutputFormat = OutputFormat.CSV,
               columns: list[str] = COLUMNS) -> None:
    path = Path(path)
    if fmt is OutputFormat.CSV:
        text = rows_to_csv(rows, columns)
    else:
        text = json.dumps([{c: row.get(c) for c in columns} for row in rows], indent=1) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# -- figure presets --------------------------------------------------------------------


class FigureId(enum.Enum):
    Fig6 = "Fig6"
    Fig7 = "Fig7"
    Fig8 = "Fig8"
    Fig9 = "Fig9"
    Fig10 = "Fig10"
    Fig11ProbDist = "Fig11ProbDist"
    Fig12 = "Fig12"
    FigHomSuccess = "FigHomSuccess"


EQUAL_LOSS_T = [1.0, 0.99, 0.98, 0.97, 0.96, 0.95]
BANDWIDTHS = [0.01, 0.25, 0.5, 1.0]

PRESETS: dict[FigureId, SweepSpec] = {
    FigureId.Fig6: SweepSpec(T=EQUAL_LOSS_T),
    FigureId.Fig7: SweepSpec(T=[1.0, 0.97, 0.95], Upsilon=[0.0, 0.05, 0.10]),
    FigureId.Fig8: SweepSpec(
        alpha_steps=41, T=[1.0], Upsilon=[float(u) for u in np.linspace(0.0025, 0.10, 41)]
    ),
    FigureId.Fig9: SweepSpec(T=[1.0], dx=BANDWIDTHS),
    FigureId.Fig10: SweepSpec(T=[0.95], dx=BANDWIDTHS),
    FigureId.Fig12: SweepSpec(alpha_max=2.5, alpha_steps=101, T=EQUAL_LOSS_T, fidelity=False),
    FigureId.FigHomSuccess: SweepSpec(T=[1.0], dx=BANDWIDTHS + [5.0], fidelity=False),
}

PROB_DIST_ALPHAS = [0.0, 1.0, 2.0]
PROB_DIST_GRID = np.linspace(-4.0, 4.0, 801)


def figure_rows(fig: FigureId, workers: int | None = None) -> tuple[list[dict], list[str], dict]:
    """Dataset rows, column names and preset description for ``fig``."""
    if fig is FigureId.Fig11ProbDist:
        columns = ["x"] + [f"density_alpha_{a:g}" for a in PROB_DIST_ALPHAS]
        curves = [
            [d for _, d in quadrature_distribution(ProtocolParams(alpha=a, T=1.0), PROB_DIST_GRID)]
            for a in PROB_DIST_ALPHAS
        ]
        rows = [
            dict(zip(columns, [float(x)] + [c[i] for c in curves]))
            for i, x in enumerate(PROB_DIST_GRID)
        ]
        preset = {"alpha": PROB_DIST_ALPHAS, "T": 1.0, "x_min": -4.0, "x_max": 4.0, "x_points": 801}
        return rows, columns, preset
    spec = PRESETS[fig]
    return run_sweep(spec, workers), COLUMNS, spec.as_dict()


def reproduce_figure(fig: FigureId | str, outdir: str | os.PathLike, workers: int | None = None) -> list[Path]:
    """Write ``<fig>.csv`` and ``<fig>.meta.json`` into ``outdir``."""
    fig = FigureId(fig) if not isinstance(fig, FigureId) else fig
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    rows, columns, preset = figure_rows(fig, workers)
    wall = time.perf_counter() - start
    csv_path = outdir / f"{fig.value}.csv"
    meta_path = outdir / f"{fig.value}.meta.json"
    write_rows(rows, csv_path, OutputFormat.CSV, columns)
    meta = {"figure": fig.value, "preset": preset, "version": __version__,
            "wall_time_s": wall, "rows": len(rows)}
    meta_path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return [csv_path, meta_path]


# -- distance report ---------------------------------------------------------------------


DEFAULT_THRESHOLDS = (0.80, 0.70, 0.60)


def tolerated_transmission(threshold: float, Upsilon: float | None = 0.05,
                           T_bounds: tuple[float, float] = (0.6, 0.999)) -> float:
    """Smallest per-arm transmission whose best fidelity still reaches ``threshold``."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("fidelity threshold must be in (0, 1)")

    def gap(T: float) -> float:
        return peak_fidelity(T, Upsilon, alpha_range=(0.6, 2.4), step=0.1, node_count=24)[0] - threshold

    return float(brentq(gap, *T_bounds, xtol=1e-5))


def distance_report(thresholds=DEFAULT_THRESHOLDS, atten_db_per_km: float = 0.149,
                    Upsilon: float | None = 0.05) -> list[dict]:
    """Tolerated transmission and Alice-Bob separation for each fidelity threshold.

    The measurement station sits midway, so the separation is twice the
    fibre length giving transmission ``T``.
    """
    rows = []
    for f in thresholds:
        T = tolerated_transmission(f, Upsilon)
        arm = distance_for_T(T, atten_db_per_km)
        rows.append({"threshold": f, "T": T, "loss_db": -10 * math.log10(T),
                     "arm_km": arm, "separation_km": 2 * arm})
    return rows


# -- oracle check -----------------------------------------------------------------------


ORACLE_GRID = {
    "alpha": [0.5, 1.0, 2.0],
    "T": [1.0, 0.95, 0.9],
    "upsilon": [0.0, 0.05],
    "dx": [None, 0.5],
}


def oracle_check(n_max: int = 40, tol_rho: float = 1e-6, tol_p: float = 1e-8) -> list[dict]:
    """Compare the coherent-state engine with the Fock oracle on a fixed grid."""
    cfg = OracleConfig(n_max=n_max)
    rows = []
    for a, T, u, dx in itertools.product(*ORACLE_GRID.values()):
        params = ProtocolParams(alpha=a, T=T, upsilon=u, dx=dx)
        fast = run_es_fixed(params)
        slow = oracle_run_es(params, cfg)
        td = trace_distance(fast.rho, slow.rho)
        dp = abs(fast.p_vacuum - slow.p_vacuum)
        rows.append({"alpha": a, "T": T, "upsilon": u, "dx": dx, "trace_distance": td,
                     "dp_vacuum": dp, "ok": td <= tol_rho and dp <= tol_p})
    return rows


# -- argument parsing ---------------------------------------------------------------------


def _add_sweep_flags(p: argparse.ArgumentParser) -> None:
    d = SweepSpec()
    p.add_argument("--config", help="key=value file; flags override its values")
    p.add_argument("--alpha-min", dest="alpha_min", type=float, help=f"default {d.alpha_min}")
    p.add_argument("--alpha-max", dest="alpha_max", type=float, help=f"default {d.alpha_max}")
    p.add_argument("--alpha-steps", dest="alpha_steps", type=int, help=f"default {d.alpha_steps}")
    p.add_argument("--T", dest="T", help="comma list of transmissions, default 1.0")
    p.add_argument("--Upsilon", dest="Upsilon", help="comma list of mismatch widths (0 = equal loss), default 0")
    p.add_argument("--dx", dest="dx", help="comma list of bandwidths or 'ideal', default ideal")
    p.add_argument("--peak", choices=[x.value for x in Peak], help="default plus")
    p.add_argument("--fidelity", help="compute fidelity columns (true/false), default true")
    p.add_argument("--nodes", type=int, help=f"Gauss-Legendre nodes per window, default {d.nodes}")
    p.add_argument("--upsilon-nodes", dest="upsilon_nodes", type=int,
                   help=f"mismatch quadrature nodes, default {d.upsilon_nodes}")
    p.add_argument("--output", "-o", help="output path (default: stdout)")
    p.add_argument("--format", choices=[x.value for x in OutputFormat], help="default csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="catswap", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run a parameter sweep")
    _add_sweep_flags(sweep)

    fig = sub.add_parser("figure", help="write a figure dataset")
    fig.add_argument("id", choices=[f.value for f in FigureId])
    fig.add_argument("--outdir", default=".")
    fig.add_argument("--plot-script", action="store_true",
                     help="also write a matplotlib script that plots the CSV")

    dist = sub.add_parser("distance-report", help="tolerated loss and separation per fidelity threshold")
    dist.add_argument("--thresholds", default="0.80,0.70,0.60")
    dist.add_argument("--atten", type=float, default=0.149, help="fibre attenuation in dB/km")
    dist.add_argument("--upsilon", type=float, default=0.05,
                      help="mismatch width assumed for the fidelity (0 = equal loss)")

    orc = sub.add_parser("oracle-check", help="compare against the Fock-space oracle")
    orc.add_argument("--n-max", type=int, default=40)
    orc.add_argument("--tol", type=float, default=1e-6)
    return parser


def _spec_from_args(args: argparse.Namespace) -> SweepSpec:
    spec = load_config(args.config) if args.config else SweepSpec()
    overrides = []
    for key in _FIELD_PARSERS:
        val = getattr(args, key, None)
        if val is not None:
            overrides.append(f"{key}={val}")
    return parse_config_text("\n".join(overrides), base=spec)


PLOT_TEMPLATE = """\
import sys

import matplotlib.pyplot as plt
import pandas as pd

df = pd.read_csv({csv!r}, na_values=["NA"])
fig, ax = plt.subplots()
{body}
ax.legend()
fig.savefig({png!r}, dpi=150)
"""


def write_plot_script(fig: FigureId, csv_path: Path) -> Path:
    if fig is FigureId.Fig11ProbDist:
        body = "for col in df.columns[1:]:\n    ax.plot(df['x'], df[col], label=col)"
    else:
        y = "p_vacuum" if fig is FigureId.Fig12 else "p_homodyne" if fig is FigureId.FigHomSuccess else "F_plus"
        body = (
            "for key, g in df.groupby(['T', 'Upsilon', 'dx'], dropna=False):\n"
            f"    ax.plot(g['alpha'], g[{y!r}], label=str(key))"
        )
    path = csv_path.with_suffix(".plot.py")
    path.write_text(PLOT_TEMPLATE.format(csv=csv_path.name, png=csv_path.with_suffix(".png").name,
                                         body=body), encoding="utf-8")
    return path


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "sweep":
            spec = _spec_from_args(args)
            rows = run_sweep(spec)
            if spec.output:
                write_rows(rows, spec.output, spec.format)
            elif spec.format is OutputFormat.CSV:
                sys.stdout.write(rows_to_csv(rows))
            else:
                json.dump(rows, sys.stdout, indent=1)
                sys.stdout.write("\n")
        elif args.command == "figure":
            fig = FigureId(args.id)
            paths = reproduce_figure(fig, args.outdir)
            if args.plot_script:
                paths.append(write_plot_script(fig, paths[0]))
            for p in paths:
                print(p)
        elif args.command == "distance-report":
            thresholds = [float(t) for t in args.thresholds.split(",")]
            if any(not 0 < t < 1 for t in thresholds):
                raise ConfigError("thresholds must lie in (0, 1)")
            rows = distance_report(thresholds, args.atten, args.upsilon or None)
            print(f"{'F>=':>5} {'T':>8} {'dB':>7} {'arm km':>8} {'sep km':>8}")
            for r in rows:
                print(f"{r['threshold']:5.2f} {r['T']:8.4f} {r['loss_db']:7.3f} "
                      f"{r['arm_km']:8.2f} {r['separation_km']:8.2f}")
        elif args.command == "oracle-check":
            rows = oracle_check(args.n_max, args.tol)
            for r in rows:
                flag = "ok" if r["ok"] else "FAIL"
                print(f"{flag:4} alpha={r['alpha']:<4} T={r['T']:<5} upsilon={r['upsilon']:<5} "
                      f"dx={format_value(r['dx']):<5} td={r['trace_distance']:.2e} "
                      f"dp0={r['dp_vacuum']:.2e}")
            if not all(r["ok"] for r in rows):
                return EXIT_NUMERIC
    except (ConfigError, OSError) as exc:
        print(f"catswap: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ArithmeticError as exc:
        print(f"catswap: numerical invariant failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
