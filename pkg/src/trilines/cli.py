"""Command-line interface.

Subcommands: formula, simulate, integrate, scan, render-tessellation and
sample-cell.  Values come from command-line flags first, then from an
optional JSON ``--config`` file, then from the defaults below.

Exit codes: 0 success, 2 usage or validation error, 3 numerical accuracy
failure, 4 empty Monte Carlo sample.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analytic, svg
from .arrangement import FaceOverflowError, build
from .cells import (
    QuadratureError,
    SamplerStallError,
    all_cases,
    integrate_case,
    sample_typical_cells,
)
from .estimator import SIDES, EmptySampleError, estimate_pmf
from .geometry import Weights, WeightsError
from .lines import Window, expected_cells_in_box, sample_lines

SCHEMA_VERSION = 1
DEFAULT_SEED = 20240611
DISCARD_WARN_RATIO = 0.05
COMPONENTS = ("3", "4", "5", "6", "para", "trap")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_EMPTY = 0, 2, 3, 4

DEFAULTS = {
    "p": "1/3",
    "q": "1/3",
    "seed": DEFAULT_SEED,
    "out": None,
    "format": None,
    "window_R": 60.0,
    "inner_frac": 0.25,
    "replicates": 1,
    "min_cells": 100_000,
    "workers": 1,
    "timing": False,
    "step": "1/30",
    "component": None,
    "k": 8,
}

FORMATS = {
    "formula": ("json", "csv"),
    "simulate": ("json", "csv"),
    "integrate": ("json", "csv"),
    "scan": ("csv", "json", "svg"),
    "render-tessellation": ("svg", "json", "csv"),
    "sample-cell": ("json", "svg"),
}


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# helpers


def _num(x):
    return analytic.to_jsonable(x)


def _weights(cfg) -> Weights:
    try:
        return Weights(str(cfg["p"]), str(cfg["q"]))
    except (WeightsError, ValueError, ZeroDivisionError) as e:
        raise UsageError(str(e)) from e


def _step(cfg) -> Fraction:
    try:
        step = Fraction(str(cfg["step"]))
    except (ValueError, ZeroDivisionError) as e:
        raise UsageError(f"bad grid step {cfg['step']!r}") from e
    if not 0 < step <= Fraction(1, 4):
        raise UsageError(f"grid step must lie in (0, 1/4], got {step}")
    return step


def _window(cfg) -> Window:
    try:
        return Window(float(cfg["window_R"]), float(cfg["inner_frac"]))
    except ValueError as e:
        raise UsageError(str(e)) from e


def _dump_json(obj) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **obj}, indent=2, sort_keys=True) + "\n"


def _dump_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# commands


def formula_report(w: Weights) -> dict:
    f = analytic.pmf(w)
    para, trap = analytic.para_trap_split(w)
    mean, var = analytic.mean_variance(w)
    return {
        "p": _num(w.p),
        "q": _num(w.q),
        "beta": _num(f.beta),
        "pmf": {str(n): _num(v) for n, v in f.as_dict().items()},
        "para": _num(para),
        "trap": _num(trap),
        "mean": _num(mean),
        "variance": _num(var),
    }


def cmd_formula(cfg) -> str:
    rep = formula_report(_weights(cfg))
    if cfg["format"] == "csv":
        header = ["p", "q", "beta", "p3", "p4", "p5", "p6", "para", "trap", "mean", "variance"]
        row = [rep["p"], rep["q"], rep["beta"], *rep["pmf"].values(),
               rep["para"], rep["trap"], rep["mean"], rep["variance"]]
        return _dump_csv(header, [row])
    return _dump_json(rep)


def cmd_simulate(cfg) -> str:
    w = _weights(cfg)
    window = _window(cfg)
    if expected_cells_in_box(w, window) < 1:
        print(
            f"warning: fewer than one cell expected per replicate "
            f"({expected_cells_in_box(w, window):.2f}); enlarge --window-R or --inner-frac",
            file=sys.stderr,
        )
    report = estimate_pmf(
        w,
        window,
        replicates=int(cfg["replicates"]),
        seed=int(cfg["seed"]),
        min_cells=int(cfg["min_cells"]),
        workers=int(cfg["workers"]),
    )
    exact = analytic.pmf(w).as_dict()
    ref = {n: float(v) for n, v in exact.items()}
    z = report.z_scores(ref)
    if report.discarded_ratio > DISCARD_WARN_RATIO:
        print(
            f"warning: {report.discarded_ratio:.1%} of cells in the inner box touch the "
            "window boundary; enlarge --window-R or reduce --inner-frac",
            file=sys.stderr,
        )
    if cfg["format"] == "csv":
        ci = report.ci99
        rows = [
            [n, report.counts[n], report.estimates[n], report.std_errors[n],
             ci[n][0], ci[n][1], ref[n], z[n]]
            for n in SIDES
        ]
        return _dump_csv(
            ["n", "count", "estimate", "std_error", "ci99_lo", "ci99_hi", "analytic", "z"], rows
        )
    d = report.to_dict(include_timing=bool(cfg["timing"]))
    d["analytic"] = {str(n): _num(v) for n, v in exact.items()}
    d["z_scores"] = {str(n): v for n, v in z.items()}
    d["discard_warning_threshold"] = DISCARD_WARN_RATIO
    d["boundary_warning"] = report.discarded_ratio > DISCARD_WARN_RATIO
    return _dump_json(d)


def integrate_report(w: Weights) -> dict:
    cases = [integrate_case(c, w) for c in all_cases()]
    sums = {n: sum(c.probability for c in cases if c.n == n) for n in SIDES}
    exact = analytic.pmf(w)
    para, trap = analytic.para_trap_split(w)
    sub = {
        "para": sum(c.probability for c in cases if c.subtype == "para"),
        "trap": sum(c.probability for c in cases if c.subtype == "trap"),
    }
    return {
        "p": _num(w.p),
        "q": _num(w.q),
        "cases": [
            {"label": c.label, "n": c.n, "subtype": c.subtype,
             "probability": c.probability, "est_error": c.est_error}
            for c in cases
        ],
        "sums": {str(n): v for n, v in sums.items()},
        "subtype_sums": sub,
        "analytic": {str(n): float(v) for n, v in exact.as_dict().items()},
        "analytic_subtypes": {"para": float(para), "trap": float(trap)},
        "deviation": {str(n): sums[n] - float(exact[n]) for n in SIDES},
        "max_abs_deviation": max(abs(sums[n] - float(exact[n])) for n in SIDES),
    }


def cmd_integrate(cfg) -> str:
    rep = integrate_report(_weights(cfg))
    if cfg["format"] == "csv":
        rows = [[c["label"], c["n"], c["subtype"] or "", c["probability"], c["est_error"]]
                for c in rep["cases"]]
        return _dump_csv(["label", "n", "subtype", "probability", "est_error"], rows)
    return _dump_json(rep)


def scan_rows(step: Fraction) -> list[dict]:
    rows = []
    for p, q in analytic.simplex_grid(step):
        w = Weights(p, q)
        f = analytic.pmf(w)
        para, trap = analytic.para_trap_split(w)
        rows.append({"p": p, "q": q, "3": f.p3, "4": f.p4, "5": f.p5, "6": f.p6,
                     "para": para, "trap": trap})
    return rows


def cmd_scan(cfg) -> str | dict[str, str]:
    step = _step(cfg)
    rows = scan_rows(step)
    fmt = cfg["format"]
    if fmt == "svg":
        comps = cfg["component"] or ["3"]
        figs = {}
        for comp in comps:
            if comp not in COMPONENTS:
                raise UsageError(f"unknown component {comp!r}; choose from {', '.join(COMPONENTS)}")
            title = f"P(N = {comp})" if comp.isdigit() else f"{comp} share of P(N = 4)"
            figs[comp] = svg.heatmap_svg(
                [(float(r["p"]), float(r["q"])) for r in rows],
                [float(r[comp]) for r in rows],
                float(step),
                title=title,
            )
        return figs
    if fmt == "json":
        return _dump_json({
            "step": _num(step),
            "rows": [{k: _num(v) for k, v in r.items()} for r in rows],
        })
    header = ["p", "q", "p3", "p4", "p5", "p6", "para", "trap"]
    keys = ["p", "q", "3", "4", "5", "6", "para", "trap"]
    return _dump_csv(header, [[repr(float(r[k])) for k in keys] for r in rows])


def cmd_render(cfg) -> str:
    w = _weights(cfg)
    win = _window(cfg)
    real = sample_lines(w.as_float(), win, int(cfg["seed"]))
    arr = build(real)
    fmt = cfg["format"]
    if fmt == "json":
        return _dump_json({"realization": json.loads(real.to_json()),
                           "faces": [{"id": f.id, "vertices": f.vertices.tolist(),
                                      "vertex_count": f.vertex_count,
                                      "touches_boundary": f.touches_boundary}
                                     for f in arr.faces()]})
    if fmt == "csv":
        return arr.face_csv()
    return svg.tessellation_svg(arr, inner_half_width=win.inner_half_width)


def cmd_sample_cell(cfg) -> str:
    w = _weights(cfg)
    k = int(cfg["k"])
    if k < 1:
        raise UsageError("--k must be at least 1")
    cells = sample_typical_cells(w, k, int(cfg["seed"]))
    if cfg["format"] == "svg":
        return svg.cells_svg(cells)
    return _dump_json({
        "p": _num(w.p),
        "q": _num(w.q),
        "seed": int(cfg["seed"]),
        "cells": [
            {"label": c.label, "n": c.n, "side_lengths": c.z.tolist(),
             "vertices": np.asarray(c.polygon.vertices).tolist()}
            for c in cells
        ],
    })


COMMANDS = {
    "formula": cmd_formula,
    "simulate": cmd_simulate,
    "integrate": cmd_integrate,
    "scan": cmd_scan,
    "render-tessellation": cmd_render,
    "sample-cell": cmd_sample_cell,
}


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--p", default=S, help="weight of direction 0, decimal or num/den (default 1/3)")
    g.add_argument("--q", default=S, help="weight of direction pi/3, decimal or num/den (default 1/3)")
    g.add_argument("--seed", type=int, default=S, help=f"random seed (default {DEFAULT_SEED})")
    g.add_argument("--out", default=S, help="output file (default stdout)")
    g.add_argument("--format", default=S, choices=["json", "csv", "svg"],
                   help="output format; the first listed per command is its default")
    g.add_argument("--config", default=None, help="JSON file with option values")

    sim = argparse.ArgumentParser(add_help=False)
    s = sim.add_argument_group("simulation options")
    s.add_argument("--window-R", dest="window_R", type=float, default=S,
                   help="window half-width R (default 60)")
    s.add_argument("--inner-frac", dest="inner_frac", type=float, default=S,
                   help="inner box half-width as a fraction of R (default 0.25)")

    parser = argparse.ArgumentParser(
        prog="trilines",
        description="Vertex-number distribution of the typical cell of a Poisson line "
        "tessellation with three directions.",
        epilog="Exit codes: 0 ok, 2 usage/validation, 3 numerical accuracy, 4 empty sample.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sub.add_parser("formula", parents=[common], help="exact pmf, para/trap split and moments "
                   "[json|csv]")
    p = sub.add_parser("simulate", parents=[common, sim], help="Monte Carlo estimate [json|csv]")
    p.add_argument("--replicates", type=int, default=S, help="minimum replicates (default 1)")
    p.add_argument("--min-cells", dest="min_cells", type=int, default=S,
                   help="keep adding replicates until this many cells are counted (default 100000)")
    p.add_argument("--workers", type=int, default=S, help="worker processes (default 1)")
    p.add_argument("--timing", action="store_true", default=S,
                   help="include wall_time_ms (the output is then not reproducible byte for byte)")
    sub.add_parser("integrate", parents=[common], help="per-case quadrature [json|csv]")
    p = sub.add_parser("scan", parents=[common], help="pmf over a simplex grid [csv|json|svg]")
    p.add_argument("--step", default=S, help="grid step in (0, 1/4] (default 1/30)")
    p.add_argument("--component", action="append", default=S, choices=COMPONENTS,
                   help="heatmap component for --format svg; repeatable (default 3)")
    sub.add_parser("render-tessellation", parents=[common, sim],
                   help="draw one realization [svg|json|csv]")
    p = sub.add_parser("sample-cell", parents=[common], help="draw typical cells [json|svg]")
    p.add_argument("--k", type=int, default=S, help="number of cells (default 8)")
    return parser


def resolve_config(ns: argparse.Namespace) -> dict:
    """Merge flags over the config file over the defaults."""
    cfg = dict(DEFAULTS)
    if ns.config:
        try:
            data = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {ns.config}: {e}") from e
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(data)
    cfg.update({k: v for k, v in vars(ns).items() if k not in ("config", "command")})
    allowed = FORMATS[ns.command]
    if cfg["format"] is None:
        cfg["format"] = allowed[0]
    if cfg["format"] not in allowed:
        raise UsageError(f"{ns.command} supports --format {'|'.join(allowed)}")
    if isinstance(cfg["component"], str):
        cfg["component"] = [cfg["component"]]
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve_config(ns)
        result = COMMANDS[ns.command](cfg)
        if isinstance(result, dict):
            out = cfg["out"]
            if len(result) == 1:
                _emit(next(iter(result.values())), out)
            elif out is None:
                raise UsageError("several components need --out (files get a _<component> suffix)")
            else:
                base = Path(out)
                for comp, text in result.items():
                    _emit(text, str(base.with_name(f"{base.stem}_{comp}{base.suffix}")))
        else:
            _emit(result, cfg["out"])
    except UsageError as e:
        print(f"trilines {ns.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, SamplerStallError, FaceOverflowError, ArithmeticError) as e:
        print(f"trilines {ns.command}: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except EmptySampleError as e:
        print(f"trilines {ns.command}: {e}", file=sys.stderr)
        return EXIT_EMPTY
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
