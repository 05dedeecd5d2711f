"""Small builders shared across test modules."""

from __future__ import annotations

from tenurevalue.panel import MonthStamp, SectorCategory, WageSeries


def stamp_at(offset: int, start_year: int = 2005, start_month: int = 1) -> MonthStamp:
    total = (start_year * 12 + start_month - 1) + offset
    return MonthStamp(total // 12, total % 12 + 1)


def make_series(
    wages,
    person_id: str = "w",
    category: SectorCategory = SectorCategory.PRIVATE,
    start_year: int = 2005,
    start_month: int = 1,
) -> WageSeries:
    """Series with consecutive months starting at the given stamp."""
    observations = tuple(
        (stamp_at(i, start_year, start_month), float(w)) for i, w in enumerate(wages)
    )
    return WageSeries(person_id=person_id, category=category, observations=observations)
