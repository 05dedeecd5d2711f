"""Pricing civil-service job stability from monthly wage panels.

The pipeline ingests worker-month wage records, computes per-worker
risk/return statistics (return on a human-capital proxy over downside
deviation), classifies private-sector salaries into natural-breaks income
brackets, and prices each government worker's tenure as the gap between
the actual wage total and the total that would have equalized their
Sortino ratio with their bracket's private-sector mean.
"""

__version__ = "0.1.0"

from .errors import InsufficientDataError, PipelineError, SchemaError
from .panel import (
    Bracket,
    BracketTable,
    MonthStamp,
    PriceIndex,
    SectorCategory,
    SortinoStats,
    TenureValuation,
    ValuationMode,
    WageObservation,
    WageSeries,
    cents,
)

__all__ = [
    "__version__",
    "Bracket",
    "BracketTable",
    "InsufficientDataError",
    "MonthStamp",
    "PipelineError",
    "PriceIndex",
    "SchemaError",
    "SectorCategory",
    "SortinoStats",
    "TenureValuation",
    "ValuationMode",
    "WageObservation",
    "WageSeries",
    "cents",
]
