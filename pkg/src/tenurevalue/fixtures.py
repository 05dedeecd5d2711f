"""Access to the data files shipped inside the package.

Two fixtures ship with the library: a reference ten-bracket income table
(bracket bounds with mean Sortino ratios) and a single-worker stats file
for the worked example those brackets are demonstrated with.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .metrics import WorkerStats, read_stats_csv
from .panel import BracketTable
from .valuation import read_bracket_table_csv

BRACKET_FIXTURE_NAME = "income_brackets.csv"
JANE_FIXTURE_NAME = "jane_stats.csv"


def _data_path(name: str) -> Path:
    return Path(str(resources.files("tenurevalue.data").joinpath(name)))


def bundled_bracket_table_path() -> Path:
    return _data_path(BRACKET_FIXTURE_NAME)


def bundled_bracket_table() -> BracketTable:
    return read_bracket_table_csv(bundled_bracket_table_path())


def jane_stats_path() -> Path:
    return _data_path(JANE_FIXTURE_NAME)


def jane_stats() -> WorkerStats:
    rows = read_stats_csv(jane_stats_path())
    if len(rows) != 1:
        raise RuntimeError("bundled example stats file must hold exactly one worker")
    return rows[0]
