"""Bracket construction, bracket matching, and tenure pricing.

The pricing question: what wage total would have given this worker the same
Sortino ratio as the typical private-sector worker in their income bracket?
The gap between the actual total and that risk-adjusted total is the value
of tenure. Ratio arithmetic stays in floats; currency leaves this module
quantized to cents.
"""

from __future__ import annotations

import bisect
import csv
import enum
import json
import statistics
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InsufficientDataError, PipelineError, SchemaError
from .jenks import jenks_breaks, to_bracket_table
from .metrics import WorkerStats, first_three_wage_sum, mean_wage_in_year, worker_stats
from .panel import (
    Bracket,
    BracketTable,
    SectorCategory,
    SortinoStats,
    TenureValuation,
    ValuationMode,
    WageSeries,
    cents,
)

ZERO_CENTS = Decimal("0.00")

INFINITE_SORTINO_FLAG = "infinite_sortino"
BELOW_RANGE_FLAG = "key_below_range"
ABOVE_RANGE_FLAG = "key_above_range"


class MatchingKeyMode(enum.Enum):
    """Which per-worker salary statistic is matched against the brackets."""

    MEAN_2005 = "mean-2005"
    FIRST_THREE_SUM = "first-three-sum"

    def __str__(self) -> str:
        return self.value


def bracket_key(series: WageSeries, mode: MatchingKeyMode) -> float:
    """The salary statistic used for bracket matching."""
    if mode is MatchingKeyMode.MEAN_2005:
        key = mean_wage_in_year(series, 2005)
        if key is None:
            raise InsufficientDataError(
                f"worker {series.person_id}: no observations in 2005 for bracket matching"
            )
        return key
    key = first_three_wage_sum(series)
    if key is None:
        raise InsufficientDataError(
            f"worker {series.person_id}: fewer than 3 observations for bracket matching"
        )
    return key


def build_private_brackets(
    keyed_stats: Sequence[tuple[float, SortinoStats]], k_classes: int
) -> BracketTable:
    """Classify private workers' keys into brackets and average their ratios.

    All supplied stats must have finite Sortino ratios; callers drop
    zero-downside workers first (their count belongs in the run report).
    """
    if not keyed_stats:
        raise PipelineError("no private workers available for bracket construction")
    for _, stats in keyed_stats:
        if stats.sortino is None:
            raise PipelineError(
                "bracket construction requires finite Sortino ratios; "
                "filter zero-downside workers first"
            )
    keys = [key for key, _ in keyed_stats]
    distinct = len(set(keys))
    if k_classes > distinct:
        raise PipelineError(
            f"only {distinct} distinct matching keys for {k_classes} classes; "
            f"pass a class count of at most {distinct}"
        )
    result = jenks_breaks(keys, k_classes)
    members: list[list[float]] = [[] for _ in range(k_classes)]
    for (_, stats), class_index in zip(keyed_stats, result.partition):
        members[class_index].append(stats.sortino)
    means = [statistics.fmean(group) for group in members]
    return to_bracket_table(result, means)


def classify_key(table: BracketTable, key: float) -> tuple[Bracket, str | None]:
    """Containing bracket plus a clamp flag when the key falls outside the table.

    Brackets are lower-inclusive and upper-exclusive; the topmost bracket is
    closed at its upper bound. Keys beyond either end clamp to the end
    bracket and are flagged.
    """
    brackets = table.brackets
    if key < brackets[0].lower:
        return brackets[0], BELOW_RANGE_FLAG
    if key > brackets[-1].upper:
        return brackets[-1], ABOVE_RANGE_FLAG
    if key == brackets[-1].upper:
        return brackets[-1], None
    lowers = [b.lower for b in brackets]
    return brackets[bisect.bisect_right(lowers, key) - 1], None


def lookup_bracket(table: BracketTable, key: float) -> Bracket:
    return classify_key(table, key)[0]


def required_return(bracket_mean_sortino: float, dd: float) -> float:
    """Return rate that equalizes the worker's Sortino with the bracket mean."""
    return bracket_mean_sortino * dd


def risk_adjusted_total(
    required: float, k: float, actual_total: float, mode: ValuationMode
) -> float:
    """Wage total implied by the required return under the chosen mode."""
    if mode is ValuationMode.FORMULA_CONSISTENT:
        return required * k
    return required * actual_total


def value_tenure(
    person_id: str,
    category: SectorCategory,
    months_observed: int,
    stats: SortinoStats,
    matching_key: float | None,
    table: BracketTable,
    mode: ValuationMode,
) -> TenureValuation:
    """Price one worker's tenure against the bracket table.

    A zero-downside worker never took a wage cut, so any positive return
    already beats every finite target: the required return collapses to 0
    and the whole wage total is tenure value. That branch skips bracket
    matching entirely and is flagged.
    """
    actual = cents(stats.total_wages)
    flags: tuple[str, ...] = ()
    if stats.sortino is None:
        risk = ZERO_CENTS
        flags = (INFINITE_SORTINO_FLAG,)
    else:
        if matching_key is None:
            raise InsufficientDataError(
                f"worker {person_id}: no matching key available for bracket lookup"
            )
        bracket, clamp_flag = classify_key(table, matching_key)
        required = required_return(bracket.mean_sortino, stats.downside_deviation)
        risk = cents(risk_adjusted_total(required, stats.k, stats.total_wages, mode))
        if clamp_flag is not None:
            flags = (clamp_flag,)

    tenure = actual - risk
    monthly = cents(tenure / months_observed)
    pct = float(monthly) / (float(actual) / months_observed)
    return TenureValuation(
        person_id=person_id,
        category=category,
        months_observed=months_observed,
        actual_total=actual,
        risk_adjusted_total=risk,
        tenure_total=tenure,
        tenure_monthly=monthly,
        tenure_pct_of_salary=pct,
        mode=mode,
        flags=flags,
    )


def matching_key_from_stats(row: WorkerStats, key_mode: MatchingKeyMode) -> float | None:
    if key_mode is MatchingKeyMode.MEAN_2005:
        return row.mean_2005_wage
    return row.first_three_wage_sum


def value_worker(
    row: WorkerStats, table: BracketTable, mode: ValuationMode, key_mode: MatchingKeyMode
) -> TenureValuation:
    return value_tenure(
        person_id=row.person_id,
        category=row.category,
        months_observed=row.months_observed,
        stats=row.stats,
        matching_key=matching_key_from_stats(row, key_mode),
        table=table,
        mode=mode,
    )


def value_batch(
    rows: Sequence[WorkerStats],
    table: BracketTable,
    mode: ValuationMode,
    key_mode: MatchingKeyMode,
) -> tuple[list[TenureValuation], list[tuple[str, str]]]:
    """Value every worker; key failures become (id, reason) exclusions."""
    valuations: list[TenureValuation] = []
    excluded: list[tuple[str, str]] = []
    for row in rows:
        try:
            valuations.append(value_worker(row, table, mode, key_mode))
        except InsufficientDataError as exc:
            excluded.append((row.person_id, str(exc)))
    return valuations, excluded


def value_series(
    series: WageSeries,
    table: BracketTable,
    mode: ValuationMode,
    key_mode: MatchingKeyMode,
) -> TenureValuation:
    """Convenience: stats + key + valuation straight from a series."""
    return value_worker(worker_stats(series), table, mode, key_mode)


BRACKET_COLUMNS = ["lower", "upper", "mean_sortino"]


def read_bracket_table_csv(path: Path) -> BracketTable:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != BRACKET_COLUMNS:
            raise SchemaError(f"{path}: bad bracket header {header}, expected {BRACKET_COLUMNS}")
        brackets = []
        for line_number, fields in enumerate(reader, start=2):
            if len(fields) != 3:
                raise SchemaError(f"{path}:{line_number}: expected 3 fields")
            try:
                brackets.append(Bracket(float(fields[0]), float(fields[1]), float(fields[2])))
            except ValueError as exc:
                raise SchemaError(f"{path}:{line_number}: {exc}") from None
    if not brackets:
        raise SchemaError(f"{path}: bracket table is empty")
    return BracketTable(tuple(brackets))


def write_bracket_table_csv(path: Path, table: BracketTable) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(BRACKET_COLUMNS)
        for b in table.brackets:
            writer.writerow([repr(b.lower), repr(b.upper), repr(b.mean_sortino)])


def write_bracket_table_json(path: Path, table: BracketTable) -> None:
    payload = [
        {"lower": b.lower, "upper": b.upper, "mean_sortino": b.mean_sortino}
        for b in table.brackets
    ]
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")


VALUATION_COLUMNS = [
    "person_id",
    "category",
    "months_observed",
    "actual_total",
    "risk_adjusted_total",
    "tenure_total",
    "tenure_monthly",
    "tenure_pct_of_salary",
    "mode",
    "flags",
]


def write_valuations_csv(path: Path, valuations: Iterable[TenureValuation]) -> int:
    count = 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(VALUATION_COLUMNS)
        for v in valuations:
            writer.writerow(
                [
                    v.person_id,
                    v.category.value,
                    v.months_observed,
                    str(v.actual_total),
                    str(v.risk_adjusted_total),
                    str(v.tenure_total),
                    str(v.tenure_monthly),
                    repr(v.tenure_pct_of_salary),
                    v.mode.value,
                    ";".join(v.flags),
                ]
            )
            count += 1
    return count


def read_valuations_csv(path: Path) -> list[TenureValuation]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != VALUATION_COLUMNS:
            raise SchemaError(f"{path}: bad valuation header {header}, expected {VALUATION_COLUMNS}")
        out = []
        for line_number, fields in enumerate(reader, start=2):
            if len(fields) != len(VALUATION_COLUMNS):
                raise SchemaError(f"{path}:{line_number}: expected {len(VALUATION_COLUMNS)} fields")
            try:
                out.append(
                    TenureValuation(
                        person_id=fields[0],
                        category=SectorCategory(fields[1]),
                        months_observed=int(fields[2]),
                        actual_total=Decimal(fields[3]),
                        risk_adjusted_total=Decimal(fields[4]),
                        tenure_total=Decimal(fields[5]),
                        tenure_monthly=Decimal(fields[6]),
                        tenure_pct_of_salary=float(fields[7]),
                        mode=ValuationMode(fields[8]),
                        flags=tuple(fields[9].split(";")) if fields[9] else (),
                    )
                )
            except (ValueError, ArithmeticError) as exc:
                raise SchemaError(f"{path}:{line_number}: {exc}") from None
        return out
