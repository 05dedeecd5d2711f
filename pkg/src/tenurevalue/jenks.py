"""Exact Fisher-Jenks natural breaks for 1-D data.

The optimizer is a dynamic program over the sorted values with prefix-sum
interval costs, O(k n^2) time and O(k n) memory, so a 1e5-point input never
materializes an n x n matrix. `brute_force_breaks` enumerates every
contiguous partition of tiny inputs and serves as the testing oracle.

Ties among equal-SSD partitions resolve to the smallest first-class size,
then lexicographically by class sizes; both searches pick the earliest
split end at equal cost, which realizes exactly that order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import PipelineError
from .panel import BracketTable

BRUTE_FORCE_MAX_N = 16


@dataclass(frozen=True)
class BreaksResult:
    """Optimal classification of the input values.

    boundaries holds the k-1 interior cut values, each the smallest member
    of classes 2..k in sorted order; with duplicates straddling a cut the
    boundary is the value at the first sorted position of the class.
    partition assigns a class index to every input in ORIGINAL input order.
    data_min/data_max complete the outer edges for bracket construction.
    """

    boundaries: tuple[float, ...]
    partition: tuple[int, ...]
    total_within_class_ssd: float
    data_min: float
    data_max: float

    @property
    def k_classes(self) -> int:
        return len(self.boundaries) + 1


def _prefix_sums(xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = np.zeros(xs.size + 1)
    s2 = np.zeros(xs.size + 1)
    np.cumsum(xs, out=s[1:])
    np.cumsum(xs * xs, out=s2[1:])
    return s, s2


def _interval_cost(s: np.ndarray, s2: np.ndarray, i: int, ends: np.ndarray) -> np.ndarray:
    """SSD around the mean for sorted slices xs[i : e+1], vectorized over ends."""
    counts = ends - i + 1
    seg = s[ends + 1] - s[i]
    cost = (s2[ends + 1] - s2[i]) - seg * seg / counts
    # subtraction of near-equal quantities can dip a hair below zero
    return np.maximum(cost, 0.0)


def _sizes_to_result(
    values: Sequence[float],
    order: np.ndarray,
    xs: np.ndarray,
    class_sizes: list[int],
    total_ssd: float,
) -> BreaksResult:
    starts = np.cumsum([0] + class_sizes[:-1])
    boundaries = tuple(float(xs[p]) for p in starts[1:])
    partition = np.empty(len(values), dtype=np.int64)
    pos = 0
    for class_index, size in enumerate(class_sizes):
        partition[order[pos : pos + size]] = class_index
        pos += size
    return BreaksResult(
        boundaries=boundaries,
        partition=tuple(int(c) for c in partition),
        total_within_class_ssd=float(total_ssd),
        data_min=float(xs[0]),
        data_max=float(xs[-1]),
    )


def _validate(values: Sequence[float], k_classes: int) -> tuple[np.ndarray, np.ndarray]:
    if len(values) == 0:
        raise PipelineError("cannot classify an empty value list")
    arr = np.asarray(values, dtype=np.float64)
    order = np.argsort(arr, kind="stable")
    xs = arr[order]
    if k_classes < 1:
        raise PipelineError(f"class count must be at least 1, got {k_classes}")
    distinct = int(np.unique(xs).size)
    if k_classes > distinct:
        raise PipelineError(
            f"cannot split {distinct} distinct values into {k_classes} classes"
        )
    return order, xs


def jenks_breaks(values: Sequence[float], k_classes: int) -> BreaksResult:
    """Globally optimal partition of values into k_classes contiguous classes.

    Minimizes the total within-class sum of squared deviations; exact, not
    a heuristic. Requires 1 <= k_classes <= number of distinct values.
    """
    order, xs = _validate(values, k_classes)
    n = xs.size
    s, s2 = _prefix_sums(xs)

    if k_classes == 1:
        ssd = float(_interval_cost(s, s2, 0, np.array([n - 1]))[0])
        return _sizes_to_result(values, order, xs, [n], ssd)

    # best[j][i]: min SSD splitting xs[i:] into j classes; choice[j][i]: end
    # of the first class at the optimum (earliest end on ties).
    best = np.full((k_classes + 1, n + 1), np.inf)
    choice = np.zeros((k_classes + 1, n + 1), dtype=np.int64)
    best[0, n] = 0.0

    ends_all = np.arange(n)
    for j in range(1, k_classes + 1):
        # first class may start no later than position n - j
        for i in range(n - j, -1, -1):
            ends = ends_all[i : n - j + 1]
            totals = _interval_cost(s, s2, i, ends) + best[j - 1, ends + 1]
            pick = int(np.argmin(totals))
            best[j, i] = totals[pick]
            choice[j, i] = i + pick

    sizes: list[int] = []
    i = 0
    for j in range(k_classes, 0, -1):
        end = int(choice[j, i])
        sizes.append(end - i + 1)
        i = end + 1
    return _sizes_to_result(values, order, xs, sizes, float(best[k_classes, 0]))


def brute_force_breaks(values: Sequence[float], k_classes: int) -> BreaksResult:
    """Exhaustive minimum over all contiguous partitions; oracle for tiny inputs."""
    if len(values) > BRUTE_FORCE_MAX_N:
        raise PipelineError(
            f"brute force handles at most {BRUTE_FORCE_MAX_N} values, got {len(values)}"
        )
    order, xs = _validate(values, k_classes)
    n = xs.size
    s, s2 = _prefix_sums(xs)

    best_ssd = np.inf
    best_sizes: list[int] | None = None
    for cuts in itertools.combinations(range(1, n), k_classes - 1):
        edges = (0, *cuts, n)
        ssd = 0.0
        for a, b in zip(edges, edges[1:]):
            ssd += float(_interval_cost(s, s2, a, np.array([b - 1]))[0])
        # strict < keeps the first (lexicographically smallest) partition on ties
        if ssd < best_ssd:
            best_ssd = ssd
            best_sizes = [b - a for a, b in zip(edges, edges[1:])]
    assert best_sizes is not None
    return _sizes_to_result(values, order, xs, best_sizes, best_ssd)


def to_bracket_table(result: BreaksResult, bracket_sortino_means: Sequence[float]) -> BracketTable:
    """Turn a classification into income brackets carrying per-class mean ratios.

    Edges are [data_min, *interior boundaries, data_max]; lower-inclusive,
    upper-exclusive, topmost upper-inclusive (the lookup applies that rule).
    """
    if len(bracket_sortino_means) != result.k_classes:
        raise PipelineError(
            f"{result.k_classes} classes but {len(bracket_sortino_means)} means supplied"
        )
    edges = [result.data_min, *result.boundaries, result.data_max]
    for lo, hi in zip(edges, edges[1:]):
        if not lo < hi:
            raise PipelineError(
                "degenerate class edges (duplicate values straddle a cut); "
                "reduce the class count"
            )
    return BracketTable.from_edges(edges, list(bracket_sortino_means))
