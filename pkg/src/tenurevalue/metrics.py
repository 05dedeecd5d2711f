"""Risk and return metrics over monthly wage series.

Conventions, fixed once here so everything downstream agrees:

 - k, the human-capital proxy, is 100 times the mean of the worker's first
   three observed monthly wages.
 - the return rate is total observed wages divided by k.
 - month-over-month changes are relative: r_t = w[t+1]/w[t] - 1, taken over
   consecutive observations (gap months already removed), so a series of n
   wages yields n-1 changes.
 - downside deviation divides the sum of squared negative changes by the
   count of ALL changes, not just the negative ones.
 - a zero downside deviation makes the Sortino ratio infinite; that is
   encoded as None, never as float('inf').
"""

from __future__ import annotations

import concurrent.futures
import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InsufficientDataError, SchemaError
from .panel import SectorCategory, SortinoStats, WageSeries

MIN_OBSERVATIONS_FOR_K = 3


def human_capital_proxy(series: WageSeries) -> float:
    """k = 100 * mean of the first three observed monthly wages."""
    wages = series.wages
    if len(wages) < MIN_OBSERVATIONS_FOR_K:
        raise InsufficientDataError(
            f"worker {series.person_id}: {len(wages)} observations, "
            f"need {MIN_OBSERVATIONS_FOR_K} for the human-capital proxy"
        )
    return 100.0 * ((wages[0] + wages[1] + wages[2]) / 3.0)


def total_wages(series: WageSeries) -> float:
    return math.fsum(series.wages)


def return_rate(series: WageSeries, k: float) -> float:
    """Total observed wages as a fraction of the human-capital proxy."""
    return total_wages(series) / k


def monthly_changes(series: WageSeries) -> np.ndarray:
    """Relative month-over-month wage changes between consecutive observations."""
    w = np.asarray(series.wages, dtype=np.float64)
    return w[1:] / w[:-1] - 1.0


def downside_deviation(changes: np.ndarray) -> float:
    """Root mean square of negative changes, normalized by the total change count."""
    if changes.size == 0:
        return 0.0
    neg = changes[changes < 0.0]
    return float(np.sqrt(np.sum(neg * neg) / changes.size))


def full_std_dev(changes: np.ndarray) -> float:
    """Population standard deviation of all changes (Sharpe denominator)."""
    if changes.size == 0:
        return 0.0
    return float(np.std(changes))


def sortino_ratio(rate: float, dd: float) -> float | None:
    """Excess return over downside deviation; None tags the infinite case."""
    if dd == 0.0:
        return None
    return rate / dd


def sharpe_ratio(rate: float, sd: float) -> float | None:
    """Excess return over full volatility; None tags the infinite case."""
    if sd == 0.0:
        return None
    return rate / sd


def compute_stats(series: WageSeries) -> SortinoStats:
    """All per-worker risk/return quantities in one pass."""
    k = human_capital_proxy(series)
    rate = return_rate(series, k)
    dd = downside_deviation(monthly_changes(series))
    return SortinoStats(
        k=k,
        total_wages=total_wages(series),
        return_rate=rate,
        downside_deviation=dd,
        sortino=sortino_ratio(rate, dd),
    )


def stats_from_components(k: float, total: float, dd: float) -> SortinoStats:
    """Assemble stats from already-known components (fixture rows, CSV reload)."""
    rate = total / k
    return SortinoStats(
        k=k,
        total_wages=total,
        return_rate=rate,
        downside_deviation=dd,
        sortino=sortino_ratio(rate, dd),
    )


def mean_wage_in_year(series: WageSeries, year: int) -> float | None:
    """Mean deflated wage over the observations falling in `year`, if any."""
    wages = [w for stamp, w in series.observations if stamp.year == year]
    if not wages:
        return None
    return math.fsum(wages) / len(wages)


def first_three_wage_sum(series: WageSeries) -> float | None:
    """Sum of the first three observed wages (alternate bracket key)."""
    if len(series) < 3:
        return None
    w = series.wages
    return w[0] + w[1] + w[2]


@dataclass(frozen=True)
class WorkerStats:
    """Per-worker stats row plus the candidate bracket-matching keys."""

    person_id: str
    category: SectorCategory
    months_observed: int
    stats: SortinoStats
    mean_2005_wage: float | None
    first_three_wage_sum: float | None


def worker_stats(series: WageSeries) -> WorkerStats:
    return WorkerStats(
        person_id=series.person_id,
        category=series.category,
        months_observed=len(series),
        stats=compute_stats(series),
        mean_2005_wage=mean_wage_in_year(series, 2005),
        first_three_wage_sum=first_three_wage_sum(series),
    )


def compute_stats_batch(
    series_list: Sequence[WageSeries], threads: int = 1
) -> tuple[list[WorkerStats], list[tuple[str, str]]]:
    """Stats for every series; workers too short for k become (id, reason) exclusions.

    Output order follows input order regardless of thread count.
    """

    def one(series: WageSeries) -> WorkerStats | tuple[str, str]:
        try:
            return worker_stats(series)
        except InsufficientDataError as exc:
            return (series.person_id, str(exc))

    if threads > 1 and len(series_list) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, series_list))
    else:
        results = [one(s) for s in series_list]

    kept: list[WorkerStats] = []
    excluded: list[tuple[str, str]] = []
    for r in results:
        if isinstance(r, WorkerStats):
            kept.append(r)
        else:
            excluded.append(r)
    return kept, excluded


STATS_COLUMNS = [
    "person_id",
    "category",
    "months_observed",
    "k",
    "total_wages",
    "return_rate",
    "downside_deviation",
    "sortino",
    "mean_2005_wage",
    "first_three_wage_sum",
]


def _opt(value: float | None) -> str:
    return "" if value is None else repr(value)


def write_stats_csv(path: Path, rows: Iterable[WorkerStats]) -> int:
    """Write per-worker stats; empty cells encode None (infinite or missing)."""
    count = 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(STATS_COLUMNS)
        for row in rows:
            s = row.stats
            writer.writerow(
                [
                    row.person_id,
                    row.category.value,
                    row.months_observed,
                    repr(s.k),
                    repr(s.total_wages),
                    repr(s.return_rate),
                    repr(s.downside_deviation),
                    _opt(s.sortino),
                    _opt(row.mean_2005_wage),
                    _opt(row.first_three_wage_sum),
                ]
            )
            count += 1
    return count


def read_stats_csv(path: Path) -> list[WorkerStats]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != STATS_COLUMNS:
            raise SchemaError(f"{path}: unexpected stats header {header}")
        out = []
        for line in reader:
            if len(line) != len(STATS_COLUMNS):
                raise SchemaError(f"{path}: row has {len(line)} fields")
            stats = SortinoStats(
                k=float(line[3]),
                total_wages=float(line[4]),
                return_rate=float(line[5]),
                downside_deviation=float(line[6]),
                sortino=float(line[7]) if line[7] else None,
            )
            out.append(
                WorkerStats(
                    person_id=line[0],
                    category=SectorCategory(line[1]),
                    months_observed=int(line[2]),
                    stats=stats,
                    mean_2005_wage=float(line[8]) if line[8] else None,
                    first_three_wage_sum=float(line[9]) if line[9] else None,
                )
            )
        return out
