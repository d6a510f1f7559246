import csv
import io
import math

import pytest
from hypothesis import assume, given, settings, strategies as st

from hybridocl.bench import CSV_COLUMNS, RunResult, summarize, to_csv, two_proportion_test

statsmodels = pytest.importorskip("statsmodels.stats.proportion")


def _r(mode, size, seed, status, seconds, iterations=1):
    return RunResult(mode, size, seed, status, seconds, iterations, 3, 0, 1, 0.1, 0.2, 0.0, 0.0, 0.0)


# Frozen from statsmodels proportions_ztest(alternative="larger").
@pytest.mark.parametrize(
    "s1,n1,s2,n2,z,p",
    [
        (30, 50, 20, 50, 2.0, 0.022750131948179216),
        (100, 100, 60, 100, 7.0710678118654755, 7.687298972140091e-13),
    ],
)
def test_ztest_frozen_values(s1, n1, s2, n2, z, p):
    t = two_proportion_test(s1, n1, s2, n2)
    assert t.z == pytest.approx(z, rel=1e-9)
    assert t.p_value == pytest.approx(p, rel=1e-3)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 200), st.integers(1, 200), st.data())
def test_ztest_agrees_with_statsmodels(n1, n2, data):
    s1 = data.draw(st.integers(0, n1))
    s2 = data.draw(st.integers(0, n2))
    pooled = (s1 + s2) / (n1 + n2)
    assume(0 < pooled < 1)
    z, p = statsmodels.proportions_ztest([s1, s2], [n1, n2], alternative="larger")
    t = two_proportion_test(s1, n1, s2, n2)
    assert math.isclose(t.z, float(z), rel_tol=1e-9, abs_tol=1e-12)
    assert math.isclose(t.p_value, float(p), rel_tol=1e-6, abs_tol=1e-15)


def test_ztest_degenerate_samples():
    t = two_proportion_test(100, 100, 100, 100)
    assert t.z == 0.0 and t.p_value == 0.5
    with pytest.raises(ValueError):
        two_proportion_test(0, 0, 1, 1)


def test_report_line():
    text = two_proportion_test(30, 50, 20, 50).report()
    assert text.startswith("two-proportion z-test (hybrid > baseline)")
    assert "z = 2.0000" in text


def test_summarize_groups_by_mode_and_size():
    rs = [
        _r("hybrid", 5, 0, "Solved", 1.0, 2),
        _r("hybrid", 5, 1, "Solved", 3.0, 4),
        _r("hybrid", 5, 2, "BudgetExhausted", 2.0, 9),
        _r("baseline", 5, 0, "BudgetExhausted", 5.0),
    ]
    by = {(g.mode, g.size): g for g in summarize(rs)}
    h = by[("hybrid", 5)]
    assert (h.runs, h.solved, h.median_seconds, h.median_iterations) == (3, 2, 2.0, 4)
    assert h.success_rate == pytest.approx(2 / 3)
    assert h.mean_timings["check"] == pytest.approx(0.2)
    assert by[("baseline", 5)].solved == 0


def test_csv_columns_and_rows():
    text = to_csv([_r("hybrid", 5, 0, "Solved", 1.25)])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[0]["seconds"] == "1.250000" and rows[0]["status"] == "Solved"
