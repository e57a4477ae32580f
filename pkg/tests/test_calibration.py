import math
import warnings

import numpy as np
import pytest

from topn_predictability import calibration as cal
from topn_predictability.calibration import (
    CalibrationCell,
    CalibrationTable,
    CalibrationWarning,
    TableFormatError,
    build_table,
    correct,
    lookup,
    read_table,
    write_table,
)
from topn_predictability.fano import FanoProblem, sf_solve, zipf_ratios

META = {"format_version": "1", "method": "second_order", "M": "1000", "r_mode": "uniform"}
PS = [round(0.01 * k, 2) for k in range(5, 34)]


def handmade_table(expected_of_truth):
    """Table whose expected bound is a chosen function of the truth."""
    probe = CalibrationTable({}, dict(META))
    cells = {}
    for p in PS:
        t = probe.truth(p, 0.6)
        for r in (1, 10):
            dev = expected_of_truth(t, r) / t - 1
            cells[(p, 0.6, r)] = CalibrationCell(p, 0.6, r, dev, 20)
    return CalibrationTable(cells, dict(META))


def reference_like(t, r):
    return 0.3 + 2.1 * t if r == 1 else 1.02 * t


@pytest.fixture(scope="module")
def small_table():
    return build_table(([0.1, 0.2], [0.6], [1, 2, 3]), length=2**12, seeds=3)


def test_lookup_recovers_truth_on_handmade_table():
    table = handmade_table(reference_like)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        dev = lookup(table, 0.72, 0.6, 1)
    assert dev == pytest.approx(2.597, abs=0.01)
    assert 0.72 / (1 + dev) == pytest.approx(0.2, abs=0.005)


def test_lookup_at_cell_bound_returns_cell():
    table = handmade_table(reference_like)
    for p in (0.1, 0.25, 0.33):
        cell = table[(p, 0.6, 1)]
        estimate = table.truth(p, 0.6) * (1 + cell.deviation)
        assert lookup(table, estimate, 0.6, 1) == cell.deviation


def test_out_of_range_lookups_clamp_with_warning():
    table = handmade_table(reference_like)
    with pytest.warns(CalibrationWarning, match="outside table range"):
        assert lookup(table, 0.72, 0.9, 1) == lookup(table, 0.72, 0.6, 1)
    with pytest.warns(CalibrationWarning, match="outside tabulated bounds"):
        dev = lookup(table, 5.0, 0.6, 1)
    assert dev == table[(0.33, 0.6, 1)].deviation


def test_flat_column_warns():
    table = handmade_table(lambda t, r: 0.4)
    with pytest.warns(CalibrationWarning, match="not identifiable"):
        lookup(table, 0.4, 0.6, 1)


def test_unknown_rank_rejected():
    with pytest.raises(ValueError):
        lookup(handmade_table(reference_like), 0.5, 0.6, 4)


def test_correct_rescales_and_keeps_original():
    table = handmade_table(reference_like)
    bound = sf_solve(FanoProblem(5.0, 10000, (1.0,)))
    res = correct(bound, table, 0.6)
    assert res.original is bound
    assert res.pi1 == pytest.approx(bound.pi1 / (1 + res.deviation))
    ten = sf_solve(FanoProblem(5.0, 10000, tuple(zipf_ratios(0.6, 10))))
    res10 = correct(ten, table, 0.6)
    assert all(np.diff(res10.topn) >= 0) and res10.topn[-1] <= 1.0


def test_round_trip_is_bit_exact(tmp_path, small_table):
    path = tmp_path / "table.tsv"
    write_table(small_table, path)
    back = read_table(path)
    assert back == small_table
    assert back.table_id() == small_table.table_id()
    text = path.read_text()
    assert text.startswith("#") and "format_version=1" in text
    rows = [l for l in text.splitlines() if not l.startswith("#")]
    assert len(rows) == 6 and all(len(r.split("\t")) == 5 for r in rows)


def test_nan_cells_round_trip(tmp_path):
    table = build_table(([0.2, 0.4], [0.6], [1]), length=2**12, seeds=2)
    infeasible = table[(0.4, 0.6, 1)]
    assert math.isnan(infeasible.deviation) and infeasible.n_seeds == 0
    assert table.is_complete()
    write_table(table, tmp_path / "t")
    assert read_table(tmp_path / "t") == table


def test_sub_grid_reproduces_full_grid_cells(small_table):
    sub = build_table(([0.2], [0.6], [1, 2, 3]), length=2**12, seeds=3)
    for r in (1, 2, 3):
        assert sub[(0.2, 0.6, r)].deviation == small_table[(0.2, 0.6, r)].deviation


def test_deviation_non_increasing_in_rank(small_table):
    assert not [v for v in small_table.violations(floor=-math.inf) if "increases" in v]


def test_build_uses_the_estimate_pipeline(small_table):
    cell = small_table[(0.2, 0.6, 1)]
    truth = small_table.truth(0.2, 0.6)
    assert truth == pytest.approx(0.2 + (1 - 0.2 * sum(zipf_ratios(0.6, 5))) / 1000)
    assert cell.n_seeds == 3 and cell.deviation > 0


def test_parallel_build_matches_serial(small_table):
    par = build_table(([0.1, 0.2], [0.6], [1, 2, 3]), length=2**12, seeds=3, n_jobs=2)
    assert par == small_table


@pytest.mark.parametrize(
    "text",
    [
        "# format_version=1\n0.1\t0.6\t1\n",
        "# format_version=1\n0.1\t0.6\tone\t0.5\t3\n",
        "# format_version=9\n0.1\t0.6\t1\t0.5\t3\n",
        "0.1\t0.6\t1\t0.5\t3\n",
        "# format_version=1\n",
    ],
)
def test_malformed_tables_rejected(text):
    with pytest.raises(TableFormatError):
        cal.loads(text)


def test_strict_build_raises_on_violation():
    with pytest.raises(RuntimeError):
        build_table(([0.3], [0.6], [1, 10]), length=2**12, seeds=2, strict=True)


def test_default_grid_shape():
    ps, xis, ranks = cal.default_grid()
    assert ps[0] == 0.01 and ps[-1] == 0.62 and len(ps) == 62
    assert xis[0] == 0.53 and xis[-1] == 0.67
    assert ranks == list(range(1, 11))


@pytest.fixture(scope="module")
def reference_cells():
    grid = ([0.2], [0.6], range(1, 11))
    a = build_table(grid, length=2**15, seeds=20, base_seed=0)
    b = build_table(grid, length=2**15, seeds=20, base_seed=1)
    return a, b


def test_cell_stable_across_seed_sets(reference_cells):
    a, b = reference_cells
    for r in range(1, 11):
        assert abs(a[(0.2, 0.6, r)].deviation - b[(0.2, 0.6, r)].deviation) < 0.05


@pytest.mark.xfail(
    strict=True,
    reason="at M=1000 the entropy estimate is nearly independent of p, so deep-rank "
    "bounds sit well below the truth (about -0.44 at r=10)",
)
def test_no_materially_negative_deviation(reference_cells):
    a, _ = reference_cells
    assert not [v for v in a.violations() if "below" in v]
