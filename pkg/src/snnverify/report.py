"""Delimited reports and the figures rendered alongside them.

The search report CSV mirrors the benchmark-table layout (one row per
visited window length: MSE per output, verdict, tightened range, wall
time); the bounds CSV holds one row per (T, output) with given and
tightened interval ends, ready for external plotting.  The same row data
feeds the matplotlib renderers, which write figure files next to the CSVs.
Timing columns are informational and excluded from reproducibility
comparisons.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional, Sequence, Union

from .model import RangeSpec, SnnVerifyError
from .search import SearchReport
from .tighten import TightenedRange, TightenEvent

PathLike = Union[str, Path]

SEARCH_CSV_HEADER = ["T", "mse", "verification_result", "tightened_range", "total_time_s"]
BOUNDS_CSV_HEADER = ["T", "output", "given_lb", "given_ub", "tightened_lb", "tightened_ub"]
TIGHTEN_CSV_HEADER = ["output", "side", "phase", "iteration", "candidate", "verdict", "time_s"]


class EmptyReport(SnnVerifyError):
    """Nothing to emit."""


def _fmt(v: float) -> str:
    return f"{v:.5f}"


def _range_cell(spec: RangeSpec) -> str:
    return "; ".join(f"[{_fmt(l)}, {_fmt(u)}]" for l, u in zip(spec.lower, spec.upper))


def write_search_csv(report: SearchReport, path: PathLike) -> None:
    """One row per visited T, dashes where the gate kept verification off."""
    if not report.records:
        raise EmptyReport("search report has no records")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SEARCH_CSV_HEADER)
        for rec in report.records:
            mse_cell = ", ".join(_fmt(v) for v in rec.mse)
            if not rec.gate_passed:
                verdict_cell = "-"
            else:
                verdict_cell = rec.verdict.kind.value.capitalize()
            tight_cell = "-"
            if rec.tightened is not None:
                tight_cell = _range_cell(rec.tightened.range)
            w.writerow([rec.steps, mse_cell, verdict_cell, tight_cell, f"{rec.wall_time:.3f}"])


def bounds_rows(report: SearchReport) -> list[tuple[int, int, float, float, float, float]]:
    """(T, output, given lb/ub, tightened lb/ub) for every verified T.

    Rows without tightening repeat the given bounds, so a safe-everywhere
    report plots two coincident pairs of lines.
    """
    rows = []
    given = report.given
    for rec in report.records:
        if not rec.gate_passed or rec.verdict is None:
            continue
        tight = rec.tightened.range if rec.tightened is not None else given
        for i in range(len(given)):
            rows.append(
                (
                    rec.steps,
                    i,
                    float(given.lower[i]),
                    float(given.upper[i]),
                    float(tight.lower[i]),
                    float(tight.upper[i]),
                )
            )
    return rows


def emit_plot_data(
    source: Union[SearchReport, TightenedRange],
    path: PathLike,
    steps: Optional[int] = None,
    given: Optional[RangeSpec] = None,
) -> None:
    """Write the bounds CSV for a search report or a single tightening.

    A lone tightening needs the window length it belongs to and, when
    available, the original range (otherwise the given columns repeat the
    tightened values).
    """
    if isinstance(source, SearchReport):
        rows = bounds_rows(source)
    else:
        if steps is None:
            raise ValueError("a tightened range needs the window length it belongs to")
        base = given if given is not None else source.range
        rows = [
            (steps, i, float(base.lower[i]), float(base.upper[i]),
             float(source.range.lower[i]), float(source.range.upper[i]))
            for i in range(len(source.range))
        ]
    if not rows:
        raise EmptyReport("no verified rows to emit")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BOUNDS_CSV_HEADER)
        for row in rows:
            w.writerow([row[0], row[1]] + [f"{v:.9g}" for v in row[2:]])


def write_tighten_log(events: Sequence[TightenEvent], path: PathLike) -> None:
    if not events:
        raise EmptyReport("no tightening iterations to log")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TIGHTEN_CSV_HEADER)
        for e in events:
            w.writerow(
                [e.output, e.side, e.phase, e.iteration, f"{e.candidate:.9g}", e.verdict,
                 f"{e.elapsed:.3f}"]
            )


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_bounds_figure(report: SearchReport, path: PathLike) -> None:
    """Given vs. tightened bounds across T, one panel per output."""
    rows = bounds_rows(report)
    if not rows:
        raise EmptyReport("no verified rows to plot")
    plt = _pyplot()
    n_out = len(report.given)
    fig, axes = plt.subplots(n_out, 1, figsize=(6.0, 3.0 * n_out), squeeze=False, sharex=True)
    for i in range(n_out):
        ax = axes[i][0]
        ts = [r[0] for r in rows if r[1] == i]
        glb = [r[2] for r in rows if r[1] == i]
        gub = [r[3] for r in rows if r[1] == i]
        tlb = [r[4] for r in rows if r[1] == i]
        tub = [r[5] for r in rows if r[1] == i]
        ax.plot(ts, gub, "r-", label="given upper")
        ax.plot(ts, glb, "b-", label="given lower")
        ax.plot(ts, tub, "g--", marker="o", ms=3, label="tightened upper")
        ax.plot(ts, tlb, "y--", marker="o", ms=3, label="tightened lower")
        ax.set_ylabel(f"output {i}")
        ax.grid(True, alpha=0.3)
        if i == 0:
            ax.legend(loc="best", fontsize=8)
    axes[-1][0].set_xlabel("timesteps T")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_tighten_figure(events: Sequence[TightenEvent], path: PathLike) -> None:
    """Candidate bounds per iteration, one panel per (output, side)."""
    if not events:
        raise EmptyReport("no tightening iterations to plot")
    plt = _pyplot()
    keys = sorted({(e.output, e.side) for e in events})
    fig, axes = plt.subplots(len(keys), 1, figsize=(6.0, 2.5 * len(keys)), squeeze=False)
    colors = {"safe": "tab:green", "unsafe": "tab:red", "unknown": "tab:orange",
              "probe-violation": "tab:purple"}
    for row, key in enumerate(keys):
        ax = axes[row][0]
        seq = [e for e in events if (e.output, e.side) == key]
        xs = list(range(1, len(seq) + 1))
        ys = [e.candidate for e in seq]
        ax.plot(xs, ys, "k-", lw=0.7, alpha=0.5)
        for x, e in zip(xs, seq):
            ax.plot([x], [e.candidate], "o", ms=4, color=colors.get(e.verdict, "gray"))
        ax.set_ylabel(f"out {key[0]} {key[1]}")
        ax.grid(True, alpha=0.3)
    axes[-1][0].set_xlabel("tightening iteration")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
