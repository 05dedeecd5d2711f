"""Seeded synthetic wage-panel generator.

Produces registry-shaped CSV files that exercise every pipeline path at
desk scale: private workers get multiplicative wage shocks, layoff spells
and random gap months (so downside deviation is positive), public workers
get deterministic step raises and no cuts (downside deviation zero unless
shocks are configured), and a fixed count of category switchers is planted
per category to exercise the switcher filter.

Generation is reproducible: every worker draws from its own generator
seeded by (seed, category position, worker index), so output bytes depend
only on the config.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from statistics import NormalDist
from typing import Mapping

import numpy as np

from .errors import SchemaError
from .ingest import PANEL_COLUMNS
from .panel import SectorCategory

WINDOW_START_YEAR = 2005
WINDOW_MONTHS = 180

_ID_PREFIX = {
    SectorCategory.PRIVATE: "P",
    SectorCategory.FEDERAL: "F",
    SectorCategory.STATE: "S",
    SectorCategory.MUNICIPAL: "M",
}

# month 90 is where planted switchers flip category; it is force-emitted so
# every planted switcher is observable in the output
SWITCH_MONTH = 90


@dataclass(frozen=True)
class GeneratorConfig:
    rng_seed: int = 0
    per_category_counts: Mapping[SectorCategory, int] = field(
        default_factory=lambda: {c: 0 for c in SectorCategory}
    )
    private_layoff_monthly_prob: float = 0.01
    private_wage_shock_sd: float = 0.04
    public_raise_schedule: tuple[tuple[int, float], ...] = (
        (24, 1.08),
        (60, 1.10),
        (96, 1.06),
        (132, 1.08),
    )
    gap_prob: float = 0.005
    base_wage_distribution: tuple[float, float] = (8.0, 0.9)  # log-normal (mu, sigma)
    switcher_fraction: float = 0.01
    public_wage_shock_sd: float = 0.0
    malformed_rows: int = 0

    def __post_init__(self) -> None:
        for name in ("private_layoff_monthly_prob", "gap_prob", "switcher_fraction"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        for month, multiplier in self.public_raise_schedule:
            if multiplier <= 0:
                raise ValueError(f"raise multiplier must be positive, got {multiplier}")
            if not 0 <= month < WINDOW_MONTHS:
                raise ValueError(f"raise month {month} outside the observation window")
        if self.private_wage_shock_sd < 0 or self.public_wage_shock_sd < 0:
            raise ValueError("shock standard deviations must be nonnegative")
        if self.malformed_rows < 0:
            raise ValueError("malformed_rows must be nonnegative")
        for category, count in self.per_category_counts.items():
            if count < 0:
                raise ValueError(f"negative worker count for {category}")


def load_config(path: Path) -> GeneratorConfig:
    """Read a flat-key JSON config; unknown keys are rejected."""
    with open(path) as f:
        raw = json.load(f)
    if not isinstance(raw, dict):
        raise SchemaError(f"{path}: config must be a JSON object")
    kwargs: dict = {}
    for key, value in raw.items():
        if key == "per_category_counts":
            kwargs[key] = {SectorCategory(tok): int(n) for tok, n in value.items()}
        elif key == "public_raise_schedule":
            kwargs[key] = tuple((int(m), float(x)) for m, x in value)
        elif key == "base_wage_distribution":
            kwargs[key] = (float(value[0]), float(value[1]))
        elif key in ("rng_seed", "malformed_rows"):
            kwargs[key] = int(value)
        elif key in (
            "private_layoff_monthly_prob",
            "private_wage_shock_sd",
            "gap_prob",
            "switcher_fraction",
            "public_wage_shock_sd",
        ):
            kwargs[key] = float(value)
        else:
            raise SchemaError(f"{path}: unknown config key {key!r}")
    try:
        return GeneratorConfig(**kwargs)
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class GenerationSummary:
    rows_written: int
    workers_emitted: int
    switchers_planted: int
    malformed_rows_appended: int


def _month_fields(t: int) -> tuple[int, int]:
    return WINDOW_START_YEAR + t // 12, t % 12 + 1


# base wages draw from a log-normal truncated at 2.5 sigma (inverse-CDF, so
# no probability atom at the bound). An unbounded tail makes the sample
# maximum an isolated outlier often enough that a 10-class natural-breaks
# pass puts it in a class of its own, which cannot form a positive-width
# income bracket at desk-scale sample sizes.
_TRUNC_Z = 2.5
_NORMAL = NormalDist()
_TRUNC_LO = _NORMAL.cdf(-_TRUNC_Z)
_TRUNC_HI = _NORMAL.cdf(_TRUNC_Z)


def _wage_path(category: SectorCategory, config: GeneratorConfig, rng: np.random.Generator) -> np.ndarray:
    """Monthly wage level for all 180 months, before any emission filtering."""
    mu, sigma = config.base_wage_distribution
    base = math.exp(mu + sigma * _NORMAL.inv_cdf(float(rng.uniform(_TRUNC_LO, _TRUNC_HI))))
    if category is SectorCategory.PRIVATE:
        shock_sd = config.private_wage_shock_sd
        steps = np.zeros(WINDOW_MONTHS)
    else:
        shock_sd = config.public_wage_shock_sd
        steps = np.zeros(WINDOW_MONTHS)
        for month, multiplier in config.public_raise_schedule:
            steps[month:] += math.log(multiplier)
    if shock_sd > 0:
        shocks = rng.normal(0.0, shock_sd, WINDOW_MONTHS - 1)
        steps[1:] += np.cumsum(shocks)
    return base * np.exp(steps)


def _emitted_months(
    category: SectorCategory,
    config: GeneratorConfig,
    rng: np.random.Generator,
    is_switcher: bool,
) -> list[int]:
    """Months the worker appears in the panel; month 0 is always present."""
    gap_draws = rng.random(WINDOW_MONTHS) < config.gap_prob
    if category is SectorCategory.PRIVATE:
        layoff_draws = rng.random(WINDOW_MONTHS) < config.private_layoff_monthly_prob
        durations = rng.integers(1, 7, size=WINDOW_MONTHS)
    else:
        layoff_draws = np.zeros(WINDOW_MONTHS, dtype=bool)
        durations = np.zeros(WINDOW_MONTHS, dtype=np.int64)

    months: list[int] = []
    laid_off_until = 0
    for t in range(WINDOW_MONTHS):
        if is_switcher and t == SWITCH_MONTH:
            laid_off_until = 0
            months.append(t)
            continue
        if t < laid_off_until:
            continue
        if t > 0 and layoff_draws[t]:
            laid_off_until = t + int(durations[t])
            continue
        if t > 0 and gap_draws[t]:
            continue
        months.append(t)
    return months


def _switch_target(category: SectorCategory) -> SectorCategory:
    categories = list(SectorCategory)
    return categories[(category.index + 1) % len(categories)]


def generate_panel(config: GeneratorConfig, out_path: Path) -> GenerationSummary:
    """Write the panel CSV; returns counts for the run manifest."""
    rows_written = 0
    workers_emitted = 0
    switchers_planted = 0
    with open(out_path, "w", newline="") as f:
        f.write(",".join(PANEL_COLUMNS) + "\n")
        for category in SectorCategory:
            count = int(config.per_category_counts.get(category, 0))
            switcher_count = math.floor(config.switcher_fraction * count)
            prefix = _ID_PREFIX[category]
            for idx in range(count):
                rng = np.random.default_rng([config.rng_seed, category.index, idx])
                is_switcher = idx < switcher_count
                if is_switcher:
                    switchers_planted += 1
                wages = _wage_path(category, config, rng)
                months = _emitted_months(category, config, rng, is_switcher)
                person_id = f"{prefix}{idx:06d}"
                flipped = _switch_target(category).value
                for t in months:
                    year, month = _month_fields(t)
                    token = flipped if (is_switcher and t >= SWITCH_MONTH) else category.value
                    wage = max(float(wages[t]), 0.01)
                    f.write(f"{person_id},{year},{month},{wage:.2f},{token}\n")
                    rows_written += 1
                workers_emitted += 1
        for i in range(config.malformed_rows):
            # month 13 never parses; these land in the rejection report
            f.write(f"BADROW{i},2005,13,100.00,PRIVATE\n")
            rows_written += 1
    return GenerationSummary(
        rows_written=rows_written,
        workers_emitted=workers_emitted,
        switchers_planted=switchers_planted,
        malformed_rows_appended=config.malformed_rows,
    )


MONTHLY_INFLATION = 1.004


def write_price_index(out_path: Path) -> int:
    """Deterministic index covering the window, 100.0 at the final month."""
    values = [100.0]
    for _ in range(WINDOW_MONTHS - 1):
        values.append(values[-1] / MONTHLY_INFLATION)
    values.reverse()
    with open(out_path, "w", newline="") as f:
        f.write("year,month,index\n")
        for t, value in enumerate(values):
            year, month = _month_fields(t)
            f.write(f"{year},{month},{value:.6f}\n")
    return len(values)


def counts_for_all_categories(workers: int) -> dict[SectorCategory, int]:
    return {category: workers for category in SectorCategory}
