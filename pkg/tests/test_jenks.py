import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tenurevalue.errors import PipelineError
from tenurevalue.jenks import (
    BreaksResult,
    brute_force_breaks,
    jenks_breaks,
    to_bracket_table,
)
from tenurevalue.valuation import read_bracket_table_csv
from tenurevalue.fixtures import bundled_bracket_table_path


def classes_of(values, result: BreaksResult):
    groups = {}
    for value, class_index in zip(values, result.partition):
        groups.setdefault(class_index, []).append(value)
    return [sorted(groups[i]) for i in sorted(groups)]


def total_ssd(values, result: BreaksResult) -> float:
    out = 0.0
    for group in classes_of(values, result):
        mean = sum(group) / len(group)
        out += sum((x - mean) ** 2 for x in group)
    return out


class TestJenksBreaks:
    def test_two_clusters(self):
        values = [1, 2, 3, 10, 11, 12]
        result = jenks_breaks(values, 2)
        assert classes_of(values, result) == [[1, 2, 3], [10, 11, 12]]
        assert result.boundaries == (10.0,)
        assert result.total_within_class_ssd == pytest.approx(4.0)

    def test_k1_is_total_ssd(self):
        values = [4.0, 8.0, 15.0, 16.0, 23.0, 42.0]
        result = jenks_breaks(values, 1)
        mean = sum(values) / len(values)
        assert result.total_within_class_ssd == pytest.approx(
            sum((x - mean) ** 2 for x in values)
        )
        assert result.boundaries == ()

    def test_saturated_k(self):
        values = [5.0, 1.0, 9.0, 3.0]
        result = jenks_breaks(values, 4)
        assert result.total_within_class_ssd == 0.0
        assert sorted(result.partition) == [0, 1, 2, 3]
        # class order follows sorted values, partition indexes original order
        assert result.partition == (2, 0, 3, 1)

    def test_partition_follows_input_order(self):
        values = [10, 1, 11, 2]
        result = jenks_breaks(values, 2)
        assert result.partition == (1, 0, 1, 0)

    def test_reported_ssd_matches_partition(self):
        rng = np.random.default_rng(11)
        values = rng.uniform(0, 100, 40).tolist()
        result = jenks_breaks(values, 5)
        assert result.total_within_class_ssd == pytest.approx(
            total_ssd(values, result), rel=1e-9
        )

    def test_k_errors(self):
        with pytest.raises(PipelineError):
            jenks_breaks([1.0, 2.0], 0)
        with pytest.raises(PipelineError, match="distinct"):
            jenks_breaks([5.0, 5.0, 5.0], 2)
        with pytest.raises(PipelineError):
            jenks_breaks([], 1)

    def test_duplicates_within_classes(self):
        values = [1.0, 1.0, 1.0, 50.0, 50.0]
        result = jenks_breaks(values, 2)
        assert result.total_within_class_ssd == 0.0
        assert result.boundaries == (50.0,)


class TestBruteForce:
    def test_agrees_on_simple_case(self):
        values = [1, 2, 3, 10, 11, 12]
        assert brute_force_breaks(values, 2).total_within_class_ssd == pytest.approx(
            jenks_breaks(values, 2).total_within_class_ssd
        )

    def test_rejects_more_classes_than_distinct_values(self):
        with pytest.raises(PipelineError, match="distinct"):
            brute_force_breaks([5.0, 5.0, 5.0, 5.0], 2)

    def test_duplicates_cluster_together(self):
        result = brute_force_breaks([5.0, 5.0, 5.0, 5.0, 9.0, 9.0], 2)
        assert result.total_within_class_ssd == 0.0
        assert result.boundaries == (9.0,)

    def test_instance_size_cap(self):
        with pytest.raises(PipelineError, match="at most 16"):
            brute_force_breaks(list(range(17)), 2)

    def test_random_instance_is_true_minimum(self):
        rng = np.random.default_rng(3)
        values = rng.integers(1, 1000, 10).astype(float).tolist()
        best = brute_force_breaks(values, 3)
        # enumerate independently with a direct mean-based SSD
        import itertools

        xs = sorted(values)
        minimum = math.inf
        for cuts in itertools.combinations(range(1, 10), 2):
            edges = (0, *cuts, 10)
            ssd = 0.0
            for a, b in zip(edges, edges[1:]):
                seg = xs[a:b]
                mean = sum(seg) / len(seg)
                ssd += sum((x - mean) ** 2 for x in seg)
            minimum = min(minimum, ssd)
        assert best.total_within_class_ssd == pytest.approx(minimum, rel=1e-12)


@st.composite
def small_instances(draw):
    n = draw(st.integers(min_value=4, max_value=12))
    values = draw(
        st.lists(
            st.integers(min_value=1, max_value=1000), min_size=n, max_size=n
        )
    )
    k = draw(st.sampled_from([2, 3, 4]))
    distinct = len(set(values))
    if k > distinct:
        k = distinct
    return [float(v) for v in values], k


class TestProperties:
    @given(inst=small_instances())
    @settings(max_examples=150)
    def test_dp_matches_brute_force(self, inst):
        values, k = inst
        dp = jenks_breaks(values, k)
        bf = brute_force_breaks(values, k)
        assert math.isclose(
            dp.total_within_class_ssd,
            bf.total_within_class_ssd,
            rel_tol=1e-9,
            abs_tol=1e-9,
        )

    @given(inst=small_instances(), seed=st.integers(0, 2**16))
    def test_permutation_invariance(self, inst, seed):
        values, k = inst
        shuffled = list(values)
        np.random.default_rng(seed).shuffle(shuffled)
        a = jenks_breaks(values, k)
        b = jenks_breaks(shuffled, k)
        assert a.boundaries == b.boundaries
        assert a.total_within_class_ssd == pytest.approx(
            b.total_within_class_ssd, rel=1e-12, abs=1e-12
        )

    @given(
        inst=small_instances(),
        a=st.sampled_from([0.5, 2.0, 3.0]),
        b=st.sampled_from([0.0, -10.0, 100.0]),
    )
    def test_affine_invariance(self, inst, a, b):
        values, k = inst
        base = jenks_breaks(values, k)
        mapped = jenks_breaks([a * v + b for v in values], k)
        assert mapped.partition == base.partition
        assert mapped.total_within_class_ssd == pytest.approx(
            a * a * base.total_within_class_ssd, rel=1e-9, abs=1e-9
        )

    @given(inst=small_instances())
    def test_monotone_refinement(self, inst):
        values, _ = inst
        distinct = len(set(values))
        previous = math.inf
        for k in range(1, min(distinct, 5) + 1):
            ssd = jenks_breaks(values, k).total_within_class_ssd
            assert ssd <= previous + 1e-9
            previous = ssd


class TestToBracketTable:
    def test_two_class_example(self):
        values = [1, 2, 3, 10, 11, 12]
        table = to_bracket_table(jenks_breaks(values, 2), [7.0, 9.0])
        assert table.edges == (1.0, 10.0, 12.0)
        assert table.brackets[0].mean_sortino == 7.0
        assert table.brackets[1].mean_sortino == 9.0

    def test_single_class(self):
        table = to_bracket_table(jenks_breaks([3.0, 8.0], 1), [5.5])
        assert table.edges == (3.0, 8.0)

    def test_matches_shipped_fixture(self):
        edges = [2, 1079, 2185, 4101, 7115, 11593, 18087, 28369, 46357, 72539, 154022]
        means = [23.03, 13.37, 13.00, 13.50, 13.41, 13.21, 11.62, 10.54, 7.34, 5.27]
        # synthesize a BreaksResult equivalent to the shipped table
        result = BreaksResult(
            boundaries=tuple(float(e) for e in edges[1:-1]),
            partition=tuple(range(10)),
            total_within_class_ssd=0.0,
            data_min=float(edges[0]),
            data_max=float(edges[-1]),
        )
        assert to_bracket_table(result, means) == read_bracket_table_csv(
            bundled_bracket_table_path()
        )

    def test_length_mismatch(self):
        with pytest.raises(PipelineError, match="means"):
            to_bracket_table(jenks_breaks([1.0, 9.0], 2), [5.0])

    def test_degenerate_constant_top_class(self):
        # the top class holds a single repeated value, so its bracket would
        # start and end at the data maximum; no positive-width range exists
        result = jenks_breaks([1.0, 5.0, 5.0, 5.0, 5.0, 9.0], 3)
        assert result.boundaries == (5.0, 9.0)
        with pytest.raises(PipelineError, match="degenerate"):
            to_bracket_table(result, [1.0, 2.0, 3.0])
