"""Turn convergence-study CSVs into log-log error and ratio figures.

Reads only the public study CSV schema

    j,l,N,K,Lambda,P,seed,estimator_total,true_sq_error,ratio,runtime_seconds

and never touches the solver package.  Divergent rows (non-finite fields)
are dropped before plotting.  The style is pinned so that re-rendering the
same inputs yields an identical image byte stream.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

__all__ = ["PlotSpec", "RenderResult", "PlotInputError", "load_rows", "render"]

REQUIRED_COLUMNS = {
    "errors": ("N", "estimator_total", "true_sq_error"),
    "ratio": ("N", "ratio"),
}

# ratio guides: the equivalence band observed for the benchmark solver
RATIO_BAND = (0.7, 1.2)

_STYLE = {
    "figure.figsize": (7.0, 5.0),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 11,
    "svg.hashsalt": "plotgen",
}


class PlotInputError(ValueError):
    """Missing file, malformed CSV, or a referenced column that is absent."""


@dataclass(frozen=True)
class PlotSpec:
    """What to render: input CSVs, output image, mode, and axis scaling."""

    inputs: Tuple[str, ...]
    output: str
    mode: str = "errors"
    log_log: bool = True

    def __post_init__(self):
        if self.mode not in REQUIRED_COLUMNS:
            raise PlotInputError(f"unknown mode {self.mode!r}; use 'errors' or 'ratio'")
        if not self.inputs:
            raise PlotInputError("at least one input CSV is required")


@dataclass(frozen=True)
class RenderResult:
    """What was drawn, for callers that need to inspect the figure."""

    output: str
    series: Tuple[str, ...]
    slope: Optional[float]
    points_per_series: Tuple[int, ...] = field(default=())


def load_rows(path: str, columns: Sequence[str]) -> List[dict]:
    """Read the needed columns, keeping only rows finite in all of them."""
    if not os.path.exists(path):
        raise PlotInputError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames or []
        missing = [c for c in columns if c not in names]
        if missing:
            raise PlotInputError(f"{path} lacks required columns: {', '.join(missing)}")
        rows = []
        for rec in reader:
            values = {c: float(rec[c]) for c in columns}
            values["l"] = int(rec["l"]) if "l" in rec else None
            if all(math.isfinite(v) for v in (values[c] for c in columns)):
                rows.append(values)
    rows.sort(key=lambda r: r["N"])
    return rows


def _fit_slope(ns: Sequence[float], totals: Sequence[float]) -> float:
    # least-squares slope of log(total) against log(N), the study convention
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(totals, dtype=float))
    design = np.vstack([x, np.ones_like(x)]).T
    return float(np.linalg.lstsq(design, y, rcond=None)[0][0])


def render(spec: PlotSpec) -> RenderResult:
    """Render the figure described by the spec and return what was drawn.

    Errors mode plots both error series against N with markers and, when at
    least three finite points are available, a dashed fitted line with a
    slope annotation.  Ratio mode plots the estimator/true ratio with the
    guide band drawn at 0.7 and 1.2.
    """
    columns = REQUIRED_COLUMNS[spec.mode]
    tables = [load_rows(path, columns) for path in spec.inputs]
    labels = _series_labels(spec.inputs, tables)

    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        series: List[str] = []
        counts: List[int] = []
        slope = None
        if spec.mode == "errors":
            slope = _render_errors(ax, tables, labels, series, counts, spec.log_log)
        else:
            _render_ratio(ax, tables, labels, series, counts, spec.log_log)
        ax.set_xlabel("time steps N")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(loc="best")
        fig.savefig(spec.output, format=_format_of(spec.output))
        plt.close(fig)
    return RenderResult(
        output=spec.output,
        series=tuple(series),
        slope=slope,
        points_per_series=tuple(counts),
    )


def _render_errors(ax, tables, labels, series, counts, log_log) -> Optional[float]:
    slope = None
    for rows, label in zip(tables, labels):
        ns = [r["N"] for r in rows]
        est = [r["estimator_total"] for r in rows]
        true = [r["true_sq_error"] for r in rows]
        suffix = f" ({label})" if label else ""
        ax.plot(ns, est, marker="o", label="estimator" + suffix)
        ax.plot(ns, true, marker="s", linestyle="--", label="squared error" + suffix)
        series += ["estimator" + suffix, "squared error" + suffix]
        counts += [len(ns), len(ns)]
        if slope is None and len(ns) >= 3:
            slope = _fit_slope(ns, est)
            x = np.asarray(ns, dtype=float)
            level = math.exp(_fit_slope_intercept(ns, est))
            ax.plot(x, level * x**slope, linestyle=":", color="gray",
                    label=f"fit slope {slope:.2f}")
            series.append("slope-fit")
            counts.append(len(ns))
    if log_log:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_ylabel("squared error")
    if slope is not None:
        ax.set_title(f"estimator vs squared error (fitted slope {slope:.2f})")
    else:
        ax.set_title("estimator vs squared error")
    return slope


def _fit_slope_intercept(ns, totals) -> float:
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(totals, dtype=float))
    design = np.vstack([x, np.ones_like(x)]).T
    return float(np.linalg.lstsq(design, y, rcond=None)[0][1])


def _render_ratio(ax, tables, labels, series, counts, log_log) -> None:
    for rows, label in zip(tables, labels):
        ns = [r["N"] for r in rows]
        ratio = [r["ratio"] for r in rows]
        name = "estimator / squared error" + (f" ({label})" if label else "")
        ax.plot(ns, ratio, marker="o", label=name)
        series.append(name)
        counts.append(len(ns))
    lo, hi = RATIO_BAND
    ax.axhspan(lo, hi, color="tab:green", alpha=0.15)
    ax.axhline(lo, color="tab:green", linestyle="--", label=f"band {lo}")
    ax.axhline(hi, color="tab:green", linestyle="--", label=f"band {hi}")
    series += [f"band {lo}", f"band {hi}"]
    counts += [0, 0]
    if log_log:
        ax.set_xscale("log")
    ax.set_ylabel("ratio")
    ax.set_title("estimator to squared-error ratio")


def _series_labels(inputs, tables) -> List[str]:
    if len(inputs) == 1:
        return [""]
    labels = []
    for path, rows in zip(inputs, tables):
        ls = {r["l"] for r in rows if r.get("l") is not None}
        labels.append(f"l={ls.pop()}" if len(ls) == 1 else os.path.basename(path))
    return labels


def _format_of(path: str) -> str:
    ext = os.path.splitext(path)[1].lstrip(".").lower()
    return ext or "png"
