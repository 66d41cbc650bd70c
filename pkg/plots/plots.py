"""Static figures from critpop CLI outputs.

    plots.py --kind <convergence|sweep|coupling-gap> --in <csv...>
             --summary <json> --out <png>

Reads only the published CSV/JSON contracts of the critpop command line
(no simulation logic) and renders a deterministic PNG: fixed size, fixed
fonts, no timestamps, so re-rendering the same inputs is byte-identical.

Kinds:
  convergence   running time-average curves, one per input CSV; when the
                summary describes a prey-predator boundary run a dashed
                reference line marks the stationary mean K(1 - eps^2/2)
  sweep         threshold-vs-parameter curve from a CSV with columns
                param,threshold[,se]; the zero crossing is marked
  coupling-gap  average coupling gap with 3 SE bars per run, read from a
                couple-task summary.json
"""

from __future__ import annotations

import argparse
import csv
import json
from dataclasses import dataclass, field
from typing import List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

FIGSIZE = (6.4, 4.0)
DPI = 120
REFERENCE_LABEL = "boundary mean"


class MissingColumn(Exception):
    pass


class EmptyInput(Exception):
    pass


@dataclass
class FigureSpec:
    kind: str
    inputs: List[str] = field(default_factory=list)
    summary: Optional[str] = None
    out: str = "figure.png"
    title: Optional[str] = None


def read_csv(path: str):
    """Returns (column names, data array); EmptyInput when no rows."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInput(f"{path}: no header") from None
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise EmptyInput(f"{path}: no data rows")
    return header, np.asarray(rows)


def require(header, name, path):
    if name not in header:
        raise MissingColumn(f"{path}: no column {name!r} in {header}")
    return header.index(name)


def load_summary(path: Optional[str]) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _reference_level(summary: dict) -> Optional[float]:
    model = summary.get("effective_config", {}).get("model", {})
    if model.get("id") != "rma":
        return None
    p = model.get("params", {})
    if "carrying" not in p or "noise" not in p:
        return None
    return float(p["carrying"]) * (1.0 - 0.5 * float(p["noise"]) ** 2)


def _new_axes(title):
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    if title:
        ax.set_title(title)
    return fig, ax


def _convergence(spec: FigureSpec):
    if not spec.inputs:
        raise EmptyInput("convergence needs at least one CSV")
    fig, ax = _new_axes(spec.title or "running time average")
    avg_col = None
    for path in spec.inputs:
        header, data = read_csv(path)
        if avg_col is None:
            candidates = [h for h in header if h.startswith("avg_")]
            if not candidates:
                raise MissingColumn(f"{path}: no avg_* column in {header}")
            avg_col = candidates[0]
        idx = require(header, avg_col, path)
        t = data[:, require(header, "t", path)]
        ax.plot(t, data[:, idx], linewidth=1.0, label=path.rsplit("/", 1)[-1])
    level = _reference_level(load_summary(spec.summary))
    if level is not None:
        ax.axhline(level, linestyle="--", color="black", linewidth=1.0,
                   label=REFERENCE_LABEL)
    ax.set_xlabel("t")
    ax.set_ylabel(avg_col)
    ax.legend(fontsize=8)
    return fig


def _sweep(spec: FigureSpec):
    if len(spec.inputs) != 1:
        raise EmptyInput("sweep needs exactly one CSV (param,threshold[,se])")
    header, data = read_csv(spec.inputs[0])
    pi = require(header, header[0], spec.inputs[0])
    ti = require(header, "threshold", spec.inputs[0])
    order = np.argsort(data[:, pi])
    x, y = data[order, pi], data[order, ti]
    fig, ax = _new_axes(spec.title or f"threshold vs {header[0]}")
    if "se" in header:
        ax.errorbar(x, y, yerr=3.0 * data[order, require(header, "se", spec.inputs[0])],
                    fmt="o-", markersize=3, linewidth=1.0, capsize=2)
    else:
        ax.plot(x, y, "o-", markersize=3, linewidth=1.0)
    ax.axhline(0.0, color="black", linewidth=0.8)
    sign = np.sign(y)
    crossings = np.flatnonzero(np.diff(sign) != 0)
    for c in crossings:
        # linear interpolation of the zero crossing
        x0 = x[c] - y[c] * (x[c + 1] - x[c]) / (y[c + 1] - y[c])
        ax.axvline(x0, linestyle="--", color="red", linewidth=1.0)
        ax.annotate(f"{header[0]}* = {x0:.4g}", (x0, 0.0),
                    textcoords="offset points", xytext=(5, 8), fontsize=8)
    ax.set_xlabel(header[0])
    ax.set_ylabel("threshold")
    return fig


def _coupling_gap(spec: FigureSpec):
    summary = load_summary(spec.summary)
    runs = summary.get("result", {}).get("runs")
    if not runs:
        raise EmptyInput("coupling-gap needs a couple-task summary with runs")
    gaps = np.array([r["avg_gap"] for r in runs])
    ses = np.array([r["gap_se"] for r in runs])
    fig, ax = _new_axes(spec.title or f"coupling gap ({runs[0]['model_id']})")
    idx = np.arange(len(runs))
    ax.errorbar(idx, gaps, yerr=3.0 * ses, fmt="o", capsize=3)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("replicate")
    ax.set_ylabel("time-average gap (3 SE bars)")
    ax.set_xticks(idx)
    return fig


_KINDS = {"convergence": _convergence, "sweep": _sweep, "coupling-gap": _coupling_gap}


def build_figure(spec: FigureSpec):
    if spec.kind not in _KINDS:
        raise ValueError(f"--kind must be one of {sorted(_KINDS)}, got {spec.kind!r}")
    return _KINDS[spec.kind](spec)


def render(spec: FigureSpec) -> str:
    fig = build_figure(spec)
    fig.savefig(spec.out, format="png", metadata={"Software": "critpop-plots"})
    plt.close(fig)
    return spec.out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--kind", required=True, choices=sorted(_KINDS))
    parser.add_argument("--in", dest="inputs", nargs="*", default=[],
                        help="input CSV files")
    parser.add_argument("--summary", default=None, help="summary.json path")
    parser.add_argument("--out", required=True, help="output PNG path")
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)
    spec = FigureSpec(kind=args.kind, inputs=list(args.inputs),
                      summary=args.summary, out=args.out, title=args.title)
    try:
        render(spec)
    except (MissingColumn, EmptyInput, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error [{type(exc).__name__}]: {exc}")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
