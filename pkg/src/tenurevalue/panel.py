"""Core domain types for monthly wage panels.

Everything here is immutable after construction and free of I/O. Currency
amounts are exact decimals (cents) at input/output boundaries and plain
floats inside ratio arithmetic; `cents` converts between the two worlds.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Mapping

CENT = Decimal("0.01")

_STAMP_RE = re.compile(r"^(\d{4})-(\d{2})$")


def cents(value: float | int | str | Decimal) -> Decimal:
    """Quantize a currency amount to whole cents (banker's rounding)."""
    if isinstance(value, Decimal):
        return value.quantize(CENT, rounding=ROUND_HALF_EVEN)
    return Decimal(value).quantize(CENT, rounding=ROUND_HALF_EVEN)


@dataclass(frozen=True, order=True)
class MonthStamp:
    """A calendar month; ordering is lexicographic on (year, month)."""

    year: int
    month: int

    def __post_init__(self) -> None:
        if not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")

    @classmethod
    def parse(cls, text: str) -> "MonthStamp":
        """Parse 'YYYY-MM'."""
        m = _STAMP_RE.match(text.strip())
        if m is None:
            raise ValueError(f"expected YYYY-MM, got {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


class SectorCategory(enum.Enum):
    """Employer category; the wire value doubles as the CSV token."""

    PRIVATE = "PRIVATE"
    FEDERAL = "FEDERAL"
    STATE = "STATE"
    MUNICIPAL = "MUNICIPAL"

    @property
    def index(self) -> int:
        return _CATEGORY_ORDER[self]

    def __str__(self) -> str:
        return self.value


_CATEGORY_ORDER = {cat: i for i, cat in enumerate(SectorCategory)}

GOVERNMENT_CATEGORIES = (
    SectorCategory.FEDERAL,
    SectorCategory.STATE,
    SectorCategory.MUNICIPAL,
)


@dataclass(frozen=True)
class WageObservation:
    """One worker-month of nominal pay. Zero-wage months are absences and
    must be dropped before constructing one of these."""

    stamp: MonthStamp
    nominal_wage: Decimal
    category: SectorCategory

    def __post_init__(self) -> None:
        if self.nominal_wage <= 0:
            raise ValueError(f"nominal wage must be positive, got {self.nominal_wage}")


# Jan/2005 .. Dec/2019 spans 180 months; no series may exceed that window.
MAX_SERIES_LENGTH = 180


@dataclass(frozen=True)
class WageSeries:
    """One worker's gap-concatenated monthly series of deflated wages.

    Observations are strictly increasing by stamp; calendar gaps are simply
    absent, so adjacent entries may span a gap. The whole series carries a
    single sector category (switchers are filtered upstream).
    """

    person_id: str
    category: SectorCategory
    observations: tuple[tuple[MonthStamp, float], ...]

    def __post_init__(self) -> None:
        obs = self.observations
        if not obs:
            raise ValueError("wage series must have at least one observation")
        if len(obs) > MAX_SERIES_LENGTH:
            raise ValueError(
                f"wage series has {len(obs)} observations; at most "
                f"{MAX_SERIES_LENGTH} fit the observation window"
            )
        prev = None
        for stamp, wage in obs:
            if prev is not None and stamp <= prev:
                raise ValueError(f"observations not strictly increasing at {stamp}")
            prev = stamp
            if not (wage > 0 and math.isfinite(wage)):
                raise ValueError(f"deflated wage must be positive and finite, got {wage}")

    def __len__(self) -> int:
        return len(self.observations)

    @property
    def wages(self) -> tuple[float, ...]:
        return tuple(w for _, w in self.observations)

    @property
    def stamps(self) -> tuple[MonthStamp, ...]:
        return tuple(s for s, _ in self.observations)


@dataclass(frozen=True)
class PriceIndex:
    """Month-indexed deflator; wages are restated in reference-month currency."""

    reference_stamp: MonthStamp
    entries: Mapping[MonthStamp, float]

    def __post_init__(self) -> None:
        if self.reference_stamp not in self.entries:
            raise ValueError(f"reference month {self.reference_stamp} missing from index")
        for stamp, value in self.entries.items():
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"index value for {stamp} must be positive, got {value}")


@dataclass(frozen=True)
class SortinoStats:
    """Per-worker risk/return quantities.

    ``sortino is None`` is the tagged-infinity flag and must coincide with a
    zero downside deviation; downstream code branches on it explicitly
    instead of relying on IEEE infinities.
    """

    k: float
    total_wages: float
    return_rate: float
    downside_deviation: float
    sortino: float | None

    def __post_init__(self) -> None:
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.total_wages / self.k != self.return_rate:
            raise ValueError("return_rate must equal total_wages / k")
        if self.downside_deviation < 0:
            raise ValueError("downside deviation must be nonnegative")
        if (self.sortino is None) != (self.downside_deviation == 0.0):
            raise ValueError("sortino must be flagged infinite exactly when DD is zero")


@dataclass(frozen=True)
class Bracket:
    """Income bracket [lower, upper) carrying its members' mean Sortino ratio.

    The topmost bracket of a table is closed at its upper bound."""

    lower: float
    upper: float
    mean_sortino: float

    def __post_init__(self) -> None:
        if not self.lower < self.upper:
            raise ValueError(f"bracket bounds must satisfy lower < upper, got [{self.lower}, {self.upper})")


@dataclass(frozen=True)
class BracketTable:
    """Contiguous, strictly increasing income brackets."""

    brackets: tuple[Bracket, ...]

    def __post_init__(self) -> None:
        if not self.brackets:
            raise ValueError("bracket table must not be empty")
        for a, b in zip(self.brackets, self.brackets[1:]):
            if a.upper != b.lower:
                raise ValueError(f"brackets not contiguous at {a.upper} / {b.lower}")

    @classmethod
    def from_edges(cls, edges: list[float], mean_sortinos: list[float]) -> "BracketTable":
        """Build a table from n+1 bracket edges and n per-bracket means."""
        if len(edges) != len(mean_sortinos) + 1:
            raise ValueError(
                f"need one more edge than mean ({len(edges)} edges, {len(mean_sortinos)} means)"
            )
        return cls(
            tuple(
                Bracket(lower, upper, mean)
                for lower, upper, mean in zip(edges, edges[1:], mean_sortinos)
            )
        )

    @property
    def edges(self) -> tuple[float, ...]:
        return tuple(b.lower for b in self.brackets) + (self.brackets[-1].upper,)

    def __len__(self) -> int:
        return len(self.brackets)


class ValuationMode(enum.Enum):
    """How the risk-equalizing wage total is derived from the required return.

    FORMULA_CONSISTENT inverts the return-rate definition (total = rate * k).
    PAPER_EXAMPLE multiplies the required return by the actual wage total
    instead, matching the convention the bundled worked example was computed
    with (that arithmetic does not invert its own return definition).
    """

    FORMULA_CONSISTENT = "formula"
    PAPER_EXAMPLE = "paper-example"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class TenureValuation:
    """Per-worker valuation of job stability, in cents-exact currency.

    tenure_total is actual_total - risk_adjusted_total exactly;
    tenure_monthly is tenure_total / months_observed rounded to the cent.
    """

    person_id: str
    category: SectorCategory
    months_observed: int
    actual_total: Decimal
    risk_adjusted_total: Decimal
    tenure_total: Decimal
    tenure_monthly: Decimal
    tenure_pct_of_salary: float
    mode: ValuationMode
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.months_observed < 1:
            raise ValueError("months_observed must be at least 1")
        if self.tenure_total != self.actual_total - self.risk_adjusted_total:
            raise ValueError("tenure_total must equal actual_total - risk_adjusted_total")
        expected_monthly = cents(self.tenure_total / self.months_observed)
        if self.tenure_monthly != expected_monthly:
            raise ValueError("tenure_monthly must equal tenure_total / months_observed")
