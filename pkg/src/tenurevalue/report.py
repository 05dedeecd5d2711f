"""Aggregation of per-worker valuations into summaries, histograms and plots.

Plots render through the matplotlib Figure API (no pyplot, no GUI state)
straight to SVG. Output bytes are reproducible: a fixed hash salt pins the
generated element ids and the date metadata field is suppressed.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import matplotlib
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from .errors import PipelineError, SchemaError
from .panel import GOVERNMENT_CATEGORIES, SectorCategory, TenureValuation

logger = logging.getLogger(__name__)

SVG_HASH_SALT = "tenurevalue"

HISTOGRAM_COLUMNS = ["bin_lower", "bin_upper", "count"]


def lower_median(values: Sequence) -> object:
    """Median with the lower of the two middle elements on even counts."""
    if not values:
        raise PipelineError("median of an empty sequence")
    return sorted(values)[(len(values) - 1) // 2]


@dataclass(frozen=True)
class LevelSummary:
    category: SectorCategory
    median_tenure_monthly: Decimal
    negative_share: float
    median_pct_of_salary: float
    worker_count: int


def summarize(valuations: Sequence[TenureValuation]) -> list[LevelSummary]:
    """One summary per category present, in fixed category order.

    Categories with no workers are omitted (with a warning) rather than
    reported as zero rows.
    """
    by_category: dict[SectorCategory, list[TenureValuation]] = {}
    for valuation in valuations:
        by_category.setdefault(valuation.category, []).append(valuation)

    summaries = []
    for category in SectorCategory:
        group = by_category.get(category)
        if not group:
            # private workers are never valued, so only a missing government
            # group is worth flagging
            if category in GOVERNMENT_CATEGORIES:
                logger.warning(
                    "no valuations for category %s; omitted from summary", category.value
                )
            continue
        negatives = sum(1 for v in group if v.tenure_total < 0)
        summaries.append(
            LevelSummary(
                category=category,
                median_tenure_monthly=lower_median([v.tenure_monthly for v in group]),
                negative_share=negatives / len(group),
                median_pct_of_salary=lower_median([v.tenure_pct_of_salary for v in group]),
                worker_count=len(group),
            )
        )
    return summaries


@dataclass(frozen=True)
class Histogram:
    """Equal-width bins; a zero-range input collapses to one degenerate bin."""

    edges: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.edges) != len(self.counts) + 1:
            raise ValueError("need one more edge than count")

    @property
    def total(self) -> int:
        return sum(self.counts)


def trimmed_histogram(
    values: Sequence[float], trim_fraction: float = 0.025, bin_count: int = 50
) -> Histogram:
    """Drop floor(trim*n) values from each tail, then bin the remainder."""
    if not 0.0 <= trim_fraction < 0.5:
        raise PipelineError(f"trim fraction must be in [0, 0.5), got {trim_fraction}")
    if bin_count < 1:
        raise PipelineError(f"bin count must be positive, got {bin_count}")
    n = len(values)
    drop = math.floor(trim_fraction * n)
    trimmed = np.sort(np.asarray(values, dtype=np.float64))[drop : n - drop]
    if trimmed.size == 0:
        raise PipelineError(
            f"trimming {drop} values per tail empties a {n}-value dataset"
        )
    lo = float(trimmed[0])
    hi = float(trimmed[-1])
    if lo == hi:
        return Histogram(edges=(lo, hi), counts=(int(trimmed.size),))
    counts, edges = np.histogram(trimmed, bins=bin_count, range=(lo, hi))
    return Histogram(
        edges=tuple(float(e) for e in edges),
        counts=tuple(int(c) for c in counts),
    )


def write_histogram_csv(path: Path, hist: Histogram) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(HISTOGRAM_COLUMNS)
        for lower, upper, count in zip(hist.edges, hist.edges[1:], hist.counts):
            writer.writerow([repr(lower), repr(upper), count])


def read_histogram_csv(path: Path) -> Histogram:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != HISTOGRAM_COLUMNS:
            raise SchemaError(f"{path}: bad histogram header {header}, expected {HISTOGRAM_COLUMNS}")
        edges: list[float] = []
        counts: list[int] = []
        for line_number, fields in enumerate(reader, start=2):
            if len(fields) != 3:
                raise SchemaError(f"{path}:{line_number}: expected 3 fields")
            lower, upper, count = float(fields[0]), float(fields[1]), int(fields[2])
            if edges and edges[-1] != lower:
                raise SchemaError(f"{path}:{line_number}: bins not contiguous")
            if not edges:
                edges.append(lower)
            edges.append(upper)
            counts.append(count)
    if not counts:
        raise SchemaError(f"{path}: histogram is empty")
    return Histogram(edges=tuple(edges), counts=tuple(counts))


def plot_histogram(hist: Histogram, title: str, out_path: Path) -> None:
    """Render one histogram to SVG with reproducible bytes."""
    fig = Figure(figsize=(8.0, 5.0), layout="tight")
    FigureCanvasSVG(fig)
    ax = fig.add_subplot()
    if len(hist.edges) == 2 and hist.edges[0] == hist.edges[1]:
        # degenerate single-value histogram: draw one unit-wide bar
        center = hist.edges[0]
        ax.bar([center], list(hist.counts), width=1.0, color="#4878a8", edgecolor="#2b4a68")
    else:
        widths = [b - a for a, b in zip(hist.edges, hist.edges[1:])]
        ax.bar(
            list(hist.edges[:-1]),
            list(hist.counts),
            width=widths,
            align="edge",
            color="#4878a8",
            edgecolor="#2b4a68",
            linewidth=0.4,
        )
    ax.set_title(title)
    ax.set_xlabel("monthly tenure value")
    ax.set_ylabel("workers")
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT}):
        fig.savefig(out_path, format="svg", metadata={"Date": None})


def emit_plots(
    histograms: Mapping[SectorCategory, Histogram], out_dir: Path
) -> list[Path]:
    """One CSV plus one SVG per category; empty input emits nothing."""
    written: list[Path] = []
    for category in SectorCategory:
        hist = histograms.get(category)
        if hist is None:
            continue
        stem = f"hist_{category.value.lower()}"
        csv_path = out_dir / f"{stem}.csv"
        svg_path = out_dir / f"{stem}.svg"
        try:
            write_histogram_csv(csv_path, hist)
            plot_histogram(hist, f"monthly tenure value, {category.value.lower()} workers", svg_path)
        except OSError as exc:
            raise PipelineError(f"could not write plot files under {out_dir}: {exc}") from None
        written.extend([csv_path, svg_path])
    return written


def summary_to_dict(summary: LevelSummary) -> dict:
    return {
        "category": summary.category.value,
        "median_tenure_monthly": str(summary.median_tenure_monthly),
        "negative_share": summary.negative_share,
        "median_pct_of_salary": summary.median_pct_of_salary,
        "worker_count": summary.worker_count,
    }


def write_summary_json(path: Path, summaries: Iterable[LevelSummary]) -> None:
    payload = {"categories": [summary_to_dict(s) for s in summaries]}
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")


def run_report(
    valuations: Sequence[TenureValuation],
    out_dir: Path,
    trim_fraction: float = 0.025,
    bin_count: int = 50,
) -> tuple[list[LevelSummary], list[Path]]:
    """Summaries plus histogram CSV/SVG pairs for every populated category."""
    out_dir.mkdir(parents=True, exist_ok=True)
    summaries = summarize(valuations)

    histograms: dict[SectorCategory, Histogram] = {}
    by_category: dict[SectorCategory, list[float]] = {}
    for valuation in valuations:
        by_category.setdefault(valuation.category, []).append(float(valuation.tenure_monthly))
    for category, monthly_values in by_category.items():
        try:
            histograms[category] = trimmed_histogram(monthly_values, trim_fraction, bin_count)
        except PipelineError as exc:
            logger.warning("skipping histogram for %s: %s", category.value, exc)

    files = emit_plots(histograms, out_dir)
    summary_path = out_dir / "summary.json"
    write_summary_json(summary_path, summaries)
    return summaries, [summary_path, *files]
