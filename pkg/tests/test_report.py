import json
import math
from decimal import Decimal

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tenurevalue.errors import PipelineError, SchemaError
from tenurevalue.panel import SectorCategory, TenureValuation, ValuationMode, cents
from tenurevalue.report import (
    Histogram,
    lower_median,
    plot_histogram,
    read_histogram_csv,
    run_report,
    summarize,
    trimmed_histogram,
    write_histogram_csv,
    write_summary_json,
)

F = SectorCategory.FEDERAL
S = SectorCategory.STATE


def valuation(pid, monthly, category=F, months=10):
    total = cents(Decimal(monthly) * months)
    actual = Decimal("1000.00") * months
    return TenureValuation(
        person_id=pid,
        category=category,
        months_observed=months,
        actual_total=actual,
        risk_adjusted_total=actual - total,
        tenure_total=total,
        tenure_monthly=cents(total / months),
        tenure_pct_of_salary=float(monthly) / 1000.0,
        mode=ValuationMode.FORMULA_CONSISTENT,
    )


class TestLowerMedian:
    def test_odd(self):
        assert lower_median([3, 1, 2]) == 2

    def test_even_takes_lower(self):
        assert lower_median([4, 1, 3, 2]) == 2

    def test_single(self):
        assert lower_median([7]) == 7

    def test_empty_raises(self):
        with pytest.raises(PipelineError):
            lower_median([])

    @given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=99))
    def test_member_and_rank(self, xs):
        m = lower_median(xs)
        assert m in xs
        assert sum(1 for x in xs if x < m) <= (len(xs) - 1) // 2


class TestSummarize:
    def test_groups_and_order(self):
        vals = [
            valuation("s1", "50", S),
            valuation("f1", "100", F),
            valuation("f2", "-20", F),
            valuation("f3", "300", F),
        ]
        summaries = summarize(vals)
        assert [s.category for s in summaries] == [F, S]
        fed = summaries[0]
        assert fed.worker_count == 3
        assert fed.median_tenure_monthly == Decimal("100.00")
        assert fed.negative_share == pytest.approx(1 / 3)
        state = summaries[1]
        assert state.worker_count == 1
        assert state.negative_share == 0.0

    def test_even_count_lower_median(self):
        vals = [valuation(f"f{i}", str(m)) for i, m in enumerate([10, 20, 30, 40])]
        assert summarize(vals)[0].median_tenure_monthly == Decimal("20.00")

    def test_empty_input(self):
        assert summarize([]) == []


class TestTrimmedHistogram:
    def test_frozen_oracle(self):
        # np.histogram over 3..98 after dropping floor(0.025*100)=2 per tail
        hist = trimmed_histogram([float(v) for v in range(1, 101)], 0.025, 10)
        assert hist.edges == (3.0, 12.5, 22.0, 31.5, 41.0, 50.5, 60.0, 69.5, 79.0, 88.5, 98.0)
        assert hist.counts == (10, 9, 10, 9, 10, 9, 10, 9, 10, 10)
        assert hist.total == 96

    def test_no_trim_when_small(self):
        # floor(0.025*39) = 0: nothing dropped
        hist = trimmed_histogram([float(v) for v in range(39)], 0.025, 5)
        assert hist.total == 39

    def test_forty_values_drop_one_per_tail(self):
        hist = trimmed_histogram([float(v) for v in range(40)], 0.025, 5)
        assert hist.total == 38
        assert hist.edges[0] == 1.0
        assert hist.edges[-1] == 38.0

    def test_trim_ignores_input_order(self):
        values = [5.0, 1.0, 100.0, 7.0, 3.0] * 20
        a = trimmed_histogram(values, 0.1, 4)
        b = trimmed_histogram(sorted(values), 0.1, 4)
        assert a == b

    def test_constant_values_degenerate_bin(self):
        hist = trimmed_histogram([4.2] * 30, 0.025, 50)
        assert hist.edges == (4.2, 4.2)
        assert hist.counts == (30,)

    def test_bad_parameters(self):
        with pytest.raises(PipelineError, match="trim"):
            trimmed_histogram([1.0, 2.0], 0.5, 10)
        with pytest.raises(PipelineError, match="bin count"):
            trimmed_histogram([1.0, 2.0], 0.0, 0)

    @given(n=st.integers(min_value=1, max_value=40))
    def test_floor_rule_always_leaves_data(self, n):
        # 2*floor(0.49*n) < n for every n, so a survivor always exists
        hist = trimmed_histogram([float(v) for v in range(n)], 0.49, 3)
        assert hist.total == n - 2 * math.floor(0.49 * n)
        assert hist.total >= 1

    @given(
        n=st.integers(min_value=10, max_value=500),
        trim=st.sampled_from([0.0, 0.01, 0.025, 0.1, 0.25]),
    )
    def test_count_rule(self, n, trim):
        rng = np.random.default_rng(n)
        values = rng.normal(0.0, 10.0, n).tolist()
        hist = trimmed_histogram(values, trim, 13)
        assert hist.total == n - 2 * math.floor(trim * n)


class TestHistogramSerialization:
    def test_round_trip(self, tmp_path):
        hist = trimmed_histogram([float(v) for v in range(1, 101)], 0.025, 10)
        path = tmp_path / "h.csv"
        write_histogram_csv(path, hist)
        assert read_histogram_csv(path) == hist

    def test_degenerate_round_trip(self, tmp_path):
        hist = Histogram(edges=(1.5, 1.5), counts=(12,))
        path = tmp_path / "h.csv"
        write_histogram_csv(path, hist)
        assert read_histogram_csv(path) == hist

    def test_contiguity_check(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("bin_lower,bin_upper,count\n0.0,1.0,5\n2.0,3.0,5\n")
        with pytest.raises(SchemaError, match="contiguous"):
            read_histogram_csv(path)

    def test_header_check(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("a,b,c\n0.0,1.0,5\n")
        with pytest.raises(SchemaError, match="header"):
            read_histogram_csv(path)


class TestPlots:
    def test_svg_bytes_reproducible(self, tmp_path):
        hist = trimmed_histogram([float(v) for v in range(200)], 0.025, 20)
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        plot_histogram(hist, "check", a)
        plot_histogram(hist, "check", b)
        content = a.read_bytes()
        assert content == b.read_bytes()
        assert content.lstrip().startswith(b"<?xml")
        assert b"dc:date" not in content

    def test_degenerate_histogram_plots(self, tmp_path):
        hist = Histogram(edges=(3.0, 3.0), counts=(5,))
        out = tmp_path / "flat.svg"
        plot_histogram(hist, "flat", out)
        assert out.stat().st_size > 0


class TestRunReport:
    def _valuations(self):
        vals = [valuation(f"f{i}", str(10 + i), F) for i in range(30)]
        vals += [valuation(f"s{i}", str(5 * i - 20), S) for i in range(20)]
        return vals

    def test_outputs(self, tmp_path):
        out = tmp_path / "report"
        summaries, files = run_report(self._valuations(), out, 0.025, 10)
        names = sorted(p.name for p in files)
        assert names == [
            "hist_federal.csv",
            "hist_federal.svg",
            "hist_state.csv",
            "hist_state.svg",
            "summary.json",
        ]
        assert all(p.exists() for p in files)
        payload = json.loads((out / "summary.json").read_text())
        assert [entry["category"] for entry in payload["categories"]] == ["FEDERAL", "STATE"]
        assert payload["categories"][0]["worker_count"] == 30

    def test_histogram_counts_respect_trim(self, tmp_path):
        out = tmp_path / "report"
        run_report(self._valuations(), out, 0.1, 10)
        fed = read_histogram_csv(out / "hist_federal.csv")
        assert fed.total == 30 - 2 * 3

    def test_summary_json_shape(self, tmp_path):
        path = tmp_path / "summary.json"
        write_summary_json(path, summarize(self._valuations()))
        payload = json.loads(path.read_text())
        entry = payload["categories"][0]
        assert set(entry) == {
            "category",
            "median_tenure_monthly",
            "negative_share",
            "median_pct_of_salary",
            "worker_count",
        }
        # currency serializes as an exact string, not a float
        assert isinstance(entry["median_tenure_monthly"], str)

    def test_creates_output_dir(self, tmp_path):
        out = tmp_path / "deep" / "nested" / "dir"
        run_report(self._valuations(), out)
        assert (out / "summary.json").exists()
