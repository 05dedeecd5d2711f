"""Panel CSV ingestion: parse, deflate, filter switchers, sample, build series.

Parsing is lenient at row level. A bad header is a hard SchemaError, but a
bad row becomes a RowRejection carrying its line number and reason, and a
nonpositive wage is an absence (dropped and counted, not rejected), so one
mangled line never aborts a multi-gigabyte ingest.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .errors import PipelineError, SchemaError
from .panel import MonthStamp, PriceIndex, SectorCategory, WageSeries

PANEL_COLUMNS = ["person_id", "year", "month", "wage", "employer_nature"]
INDEX_COLUMNS = ["year", "month", "index"]
SERIES_COLUMNS = ["person_id", "category", "year", "month", "deflated_wage"]

# employer-nature tokens accepted out of the box; a config file may add
# numeric registry codes on top (load_nature_map)
DEFAULT_NATURE_MAP: dict[str, SectorCategory] = {c.value: c for c in SectorCategory}


def load_nature_map(path: Path) -> dict[str, SectorCategory]:
    """Default nature tokens plus code -> category entries from a JSON file."""
    with open(path) as f:
        raw = json.load(f)
    if not isinstance(raw, dict):
        raise SchemaError(f"{path}: nature map must be a JSON object")
    mapping = dict(DEFAULT_NATURE_MAP)
    for code, token in raw.items():
        try:
            mapping[str(code)] = SectorCategory(token)
        except ValueError:
            raise SchemaError(f"{path}: {token!r} is not a known category") from None
    return mapping


@dataclass(frozen=True)
class RawPanelRow:
    person_id: str
    year: int
    month: int
    nominal_wage: Decimal
    category: SectorCategory

    @property
    def stamp(self) -> MonthStamp:
        return MonthStamp(self.year, self.month)


@dataclass(frozen=True)
class RowRejection:
    line_number: int
    reason: str


@dataclass
class ParseResult:
    rows: list[RawPanelRow] = field(default_factory=list)
    rejections: list[RowRejection] = field(default_factory=list)
    absences_dropped: int = 0


def parse_panel(
    stream: TextIO, nature_map: Mapping[str, SectorCategory] | None = None
) -> ParseResult:
    """Parse a wage panel CSV; row problems become recorded rejections."""
    nature = nature_map if nature_map is not None else DEFAULT_NATURE_MAP
    reader = csv.reader(stream)
    header = next(reader, None)
    if header != PANEL_COLUMNS:
        raise SchemaError(f"bad panel header {header}, expected {PANEL_COLUMNS}")

    result = ParseResult()
    for line_number, fields in enumerate(reader, start=2):
        if not fields:
            continue
        if len(fields) != len(PANEL_COLUMNS):
            result.rejections.append(RowRejection(line_number, "wrong field count"))
            continue
        person_id, year_s, month_s, wage_s, nature_s = fields
        try:
            year = int(year_s)
        except ValueError:
            result.rejections.append(RowRejection(line_number, "invalid year"))
            continue
        try:
            month = int(month_s)
        except ValueError:
            month = -1
        if not 1 <= month <= 12:
            result.rejections.append(RowRejection(line_number, "month out of range"))
            continue
        try:
            wage = Decimal(wage_s)
        except InvalidOperation:
            result.rejections.append(RowRejection(line_number, "invalid wage"))
            continue
        if not wage.is_finite():
            result.rejections.append(RowRejection(line_number, "invalid wage"))
            continue
        category = nature.get(nature_s.strip())
        if category is None:
            result.rejections.append(
                RowRejection(line_number, "unknown employer nature code")
            )
            continue
        if wage <= 0:
            # absence semantics: the month simply does not exist for this person
            result.absences_dropped += 1
            continue
        result.rows.append(RawPanelRow(person_id, year, month, wage, category))
    return result


def load_price_index(path: Path, reference: MonthStamp) -> PriceIndex:
    """Read a `year,month,index` CSV into a PriceIndex pinned to `reference`."""
    entries: dict[MonthStamp, float] = {}
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != INDEX_COLUMNS:
            raise SchemaError(f"{path}: bad index header {header}, expected {INDEX_COLUMNS}")
        for line_number, fields in enumerate(reader, start=2):
            if len(fields) != 3:
                raise SchemaError(f"{path}:{line_number}: expected 3 fields")
            try:
                stamp = MonthStamp(int(fields[0]), int(fields[1]))
                value = float(fields[2])
            except ValueError as exc:
                raise SchemaError(f"{path}:{line_number}: {exc}") from None
            if stamp in entries:
                raise SchemaError(f"{path}:{line_number}: duplicate month {stamp}")
            entries[stamp] = value
    if reference not in entries:
        raise PipelineError(f"price index lacks the reference month {reference}")
    return PriceIndex(reference_stamp=reference, entries=entries)


def deflate(nominal_wage: Decimal | float, stamp: MonthStamp, index: PriceIndex) -> float:
    """Restate a nominal wage in reference-month currency."""
    try:
        month_value = index.entries[stamp]
    except KeyError:
        raise PipelineError(f"price index has no entry for {stamp}") from None
    return float(nominal_wage) * index.entries[index.reference_stamp] / month_value


def group_rows(rows: Iterable[RawPanelRow]) -> dict[str, list[RawPanelRow]]:
    """Rows per person, each person's list sorted by stamp (input order on ties)."""
    grouped: dict[str, list[RawPanelRow]] = {}
    for row in rows:
        grouped.setdefault(row.person_id, []).append(row)
    for person_rows in grouped.values():
        person_rows.sort(key=lambda r: (r.year, r.month))
    return grouped


def filter_switchers(
    grouped: Mapping[str, list[RawPanelRow]]
) -> tuple[dict[str, list[RawPanelRow]], list[str]]:
    """Keep only persons whose every observation shares one category."""
    retained: dict[str, list[RawPanelRow]] = {}
    switchers: list[str] = []
    for person_id, person_rows in grouped.items():
        categories = {row.category for row in person_rows}
        if len(categories) == 1:
            retained[person_id] = person_rows
        else:
            switchers.append(person_id)
    return retained, switchers


@dataclass(frozen=True)
class SamplingPlan:
    """Per-category person quotas; categories absent from the map pass through."""

    per_category_quota: Mapping[SectorCategory, int]
    rng_seed: int

    def __post_init__(self) -> None:
        for category, quota in self.per_category_quota.items():
            if quota < 0:
                raise ValueError(f"negative quota for {category}")


def sample_per_category(
    grouped: Mapping[str, list[RawPanelRow]], plan: SamplingPlan
) -> tuple[dict[str, list[RawPanelRow]], dict[str, int]]:
    """Draw min(quota, available) persons per category, deterministically.

    Sampling draws from the sorted person-id list with a generator seeded by
    (plan seed, category position), so the outcome is a pure function of the
    input set and the seed. Returns the sampled groups and a map of
    category -> available count for every category where the quota clamped.
    """
    by_category: dict[SectorCategory, list[str]] = {}
    for person_id, person_rows in grouped.items():
        by_category.setdefault(person_rows[0].category, []).append(person_id)

    kept_ids: list[str] = []
    clamps: dict[str, int] = {}
    for category, ids in sorted(by_category.items(), key=lambda kv: kv[0].index):
        quota = plan.per_category_quota.get(category)
        if quota is None:
            kept_ids.extend(ids)
            continue
        ids.sort()
        if quota >= len(ids):
            if quota > len(ids):
                clamps[category.value] = len(ids)
            kept_ids.extend(ids)
            continue
        rng = np.random.default_rng([plan.rng_seed, category.index])
        picks = rng.choice(len(ids), size=quota, replace=False)
        kept_ids.extend(ids[i] for i in sorted(picks))
    return {pid: grouped[pid] for pid in sorted(kept_ids)}, clamps


def dedupe_rows(person_rows: Sequence[RawPanelRow]) -> tuple[list[RawPanelRow], int]:
    """Collapse duplicate (person, month) rows to the highest-wage one.

    Ties keep the earliest row. Returns the deduplicated rows in stamp order
    and the number of rows dropped.
    """
    best: dict[tuple[int, int], RawPanelRow] = {}
    dropped = 0
    for row in person_rows:
        key = (row.year, row.month)
        kept = best.get(key)
        if kept is None:
            best[key] = row
        else:
            dropped += 1
            if row.nominal_wage > kept.nominal_wage:
                best[key] = row
    return [best[key] for key in sorted(best)], dropped


def build_series(person_rows: Sequence[RawPanelRow], index: PriceIndex) -> WageSeries:
    """Deflate one person's deduplicated rows into a gap-concatenated series."""
    if not person_rows:
        raise PipelineError("cannot build a series from zero observations")
    first = person_rows[0]
    for row in person_rows[1:]:
        if row.person_id != first.person_id or row.category != first.category:
            raise PipelineError(f"mixed persons or categories for {first.person_id}")
    observations = tuple(
        (row.stamp, deflate(row.nominal_wage, row.stamp, index)) for row in person_rows
    )
    return WageSeries(
        person_id=first.person_id, category=first.category, observations=observations
    )


@dataclass
class IngestReport:
    rows_parsed: int = 0
    rows_rejected: int = 0
    absences_dropped: int = 0
    duplicate_collisions: int = 0
    persons_seen: int = 0
    switchers_discarded: int = 0
    persons_sampled: int = 0
    sampling_clamps: dict[str, int] = field(default_factory=dict)
    series_built: int = 0
    persons_excluded: list[list[str]] = field(default_factory=list)
    rejection_lines: list[list[object]] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)


def ingest_panel(
    stream: TextIO,
    index: PriceIndex,
    plan: SamplingPlan | None = None,
    nature_map: Mapping[str, SectorCategory] | None = None,
) -> tuple[list[WageSeries], IngestReport]:
    """Full ingest: parse, filter switchers, sample, dedupe, deflate, build.

    Switcher detection runs before sampling and before deduplication so that
    a duplicate month in a second category still marks its person a switcher.
    """
    parsed = parse_panel(stream, nature_map)
    report = IngestReport(
        rows_parsed=len(parsed.rows),
        rows_rejected=len(parsed.rejections),
        absences_dropped=parsed.absences_dropped,
        rejection_lines=[[r.line_number, r.reason] for r in parsed.rejections[:100]],
    )

    grouped = group_rows(parsed.rows)
    report.persons_seen = len(grouped)

    retained, switchers = filter_switchers(grouped)
    report.switchers_discarded = len(switchers)

    if plan is not None:
        retained, clamps = sample_per_category(retained, plan)
        report.sampling_clamps = clamps
    report.persons_sampled = len(retained)

    series_list: list[WageSeries] = []
    for person_id in sorted(retained):
        deduped, dropped = dedupe_rows(retained[person_id])
        report.duplicate_collisions += dropped
        try:
            series_list.append(build_series(deduped, index))
        except (ValueError, PipelineError) as exc:
            report.persons_excluded.append([person_id, str(exc)])
    report.series_built = len(series_list)
    return series_list, report


def write_series_csv(path: Path, series_list: Iterable[WageSeries]) -> int:
    """Persist deflated series for the stats stage; floats written with repr."""
    count = 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(SERIES_COLUMNS)
        for series in series_list:
            for stamp, wage in series.observations:
                writer.writerow(
                    [series.person_id, series.category.value, stamp.year, stamp.month, repr(wage)]
                )
            count += 1
    return count


def read_series_csv(path: Path) -> list[WageSeries]:
    """Reload series written by write_series_csv, grouped and stamp-sorted."""
    rows: dict[str, list[tuple[MonthStamp, float, SectorCategory]]] = {}
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != SERIES_COLUMNS:
            raise SchemaError(f"{path}: bad series header {header}, expected {SERIES_COLUMNS}")
        for line_number, fields in enumerate(reader, start=2):
            if len(fields) != len(SERIES_COLUMNS):
                raise SchemaError(f"{path}:{line_number}: expected {len(SERIES_COLUMNS)} fields")
            try:
                stamp = MonthStamp(int(fields[2]), int(fields[3]))
                wage = float(fields[4])
                category = SectorCategory(fields[1])
            except ValueError as exc:
                raise SchemaError(f"{path}:{line_number}: {exc}") from None
            rows.setdefault(fields[0], []).append((stamp, wage, category))

    series_list = []
    for person_id in sorted(rows):
        person_rows = sorted(rows[person_id], key=lambda t: t[0])
        categories = {c for _, _, c in person_rows}
        if len(categories) != 1:
            raise SchemaError(f"{path}: person {person_id} has mixed categories")
        series_list.append(
            WageSeries(
                person_id=person_id,
                category=person_rows[0][2],
                observations=tuple((s, w) for s, w, _ in person_rows),
            )
        )
    return series_list
