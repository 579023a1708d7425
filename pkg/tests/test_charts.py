from __future__ import annotations

import json
import random

import pytest

from conftest import upload_table
from datalake import errors
from datalake.charts import (
    ChartSpec,
    canonical_doc_bytes,
    compute_chart_data,
    compute_choropleth,
    compute_group_series,
    compute_heatmap_grid,
    compute_scatter,
    validate_spec,
)
from datalake.table import ColumnType, TypedTable
from oracles import brute_force_grid, group_reduce

C = ColumnType.CATEGORICAL
N = ColumnType.NUMERICAL
L = ColumnType.LOCATION
T = ColumnType.TEXT


def table(headers, types, rows):
    return TypedTable(headers=headers, types=list(types), rows=[list(r) for r in rows])


# ----------------------------------------------------------------------
# group series
# ----------------------------------------------------------------------

def test_group_series_mean_by_label():
    t = table(["AREA LABEL", "employment"], [C, N],
              [["India", "10"], ["India", "20"], ["Brazil", "30"]])
    out = compute_group_series(t, "AREA LABEL", "employment", "mean")
    assert out["series"] == [{"x": "Brazil", "y": 30.0}, {"x": "India", "y": 15.0}]


def test_group_series_single_row():
    t = table(["k", "v"], [C, N], [["x", "7"]])
    out = compute_group_series(t, "k", "v", "mean")
    assert out["series"] == [{"x": "x", "y": 7.0}]


def test_group_series_sum_matches_oracle():
    rng = random.Random(12)
    rows = [[rng.choice("abcd"), f"{rng.uniform(-5, 5):.3f}"] for _ in range(12)]
    t = table(["k", "v"], [C, N], rows)
    out = compute_group_series(t, "k", "v", "sum")
    expect = group_reduce(rows, 0, 1, "sum")
    assert {p["x"]: p["y"] for p in out["series"]} == pytest.approx(expect)


def test_group_series_sum_invariant():
    rng = random.Random(3)
    rows = [[rng.choice("ab"), f"{rng.uniform(0, 10):.2f}"] for _ in range(20)]
    rows.append(["a", "not-a-number"])
    t = table(["k", "v"], [C, N], rows)
    out = compute_group_series(t, "k", "v", "sum")
    total = sum(p["y"] for p in out["series"])
    parseable = sum(float(r[1]) for r in rows if r[1] != "not-a-number")
    assert total == pytest.approx(parseable)


def test_group_series_numeric_and_temporal_sort():
    t = table(["year", "v"], [ColumnType.TEMPORAL, N],
              [["2013", "1"], ["1990", "2"], ["2001", "3"]])
    out = compute_group_series(t, "year", "v", "mean")
    assert [p["x"] for p in out["series"]] == ["1990", "2001", "2013"]
    t2 = table(["x", "v"], [N, N], [["10", "1"], ["9", "2"], ["100", "3"]])
    out2 = compute_group_series(t2, "x", "v", "mean")
    assert [p["x"] for p in out2["series"]] == ["9", "10", "100"]


# ----------------------------------------------------------------------
# scatter
# ----------------------------------------------------------------------

def test_scatter_drops_unparseable_rows():
    rows = [[str(i), str(i * 2), str(i * 3)] for i in range(8)]
    rows.insert(3, ["x", "1", "2"])
    rows.insert(5, ["4", "", "2"])
    t = table(["a", "b", "c"], [N, N, N], rows)
    out = compute_scatter(t, "a", "b", "c")
    assert len(out["points"]) == 8
    assert out["dropped"] == 2
    assert out["axes"]["x"] == [0.0, 7.0]


def test_scatter_empty_table():
    t = table(["a", "b"], [N, N], [])
    out = compute_scatter(t, "a", "b")
    assert out["points"] == [] and out["dropped"] == 0


def test_scatter_type_check():
    t = table(["a", "b"], [N, T], [])
    with pytest.raises(errors.TypeMismatch):
        compute_scatter(t, "a", "b")


# ----------------------------------------------------------------------
# heatmap
# ----------------------------------------------------------------------

def corner_table():
    pts = [("0", "0", "1"), ("2", "0", "3"), ("0", "2", "5"), ("2", "2", "7")]
    return table(["x", "y", "c"], [N, N, N], [list(p) for p in pts])


def test_heatmap_hand_computed_corner_fixture():
    out = compute_heatmap_grid(corner_table(), "x", "y", "c", bins=(3, 3),
                               aggregate="mean", interpolation="linear")
    assert out["values"] == [
        [1.0, 2.0, 3.0],
        [3.0, 4.0, 5.0],
        [5.0, 6.0, 7.0],
    ]
    # the center cell is the mean of its row-interpolated column neighbors
    assert out["values"][1][1] == pytest.approx((2.0 + 6.0) / 2)
    assert out["color_domain"] == [1.0, 7.0]


def test_heatmap_without_interpolation_keeps_empties():
    out = compute_heatmap_grid(corner_table(), "x", "y", "c", bins=(3, 3),
                               aggregate="mean", interpolation="none")
    assert out["values"][1][1] is None
    assert out["values"][0][0] == 1.0


def test_heatmap_interpolation_never_touches_filled_cells():
    t = corner_table()
    raw = compute_heatmap_grid(t, "x", "y", "c", (3, 3), "mean", "none")
    filled = compute_heatmap_grid(t, "x", "y", "c", (3, 3), "mean", "linear")
    for gy in range(3):
        for gx in range(3):
            if raw["values"][gy][gx] is not None:
                assert filled["values"][gy][gx] == raw["values"][gy][gx]


def test_heatmap_constant_field_preserved():
    rng = random.Random(8)
    rows = [[f"{rng.uniform(0, 10):.2f}", f"{rng.uniform(0, 10):.2f}", "4.25"]
            for _ in range(40)]
    t = table(["x", "y", "c"], [N, N, N], rows)
    out = compute_heatmap_grid(t, "x", "y", "c", (5, 5), "mean", "linear")
    for row in out["values"]:
        for v in row:
            assert v is None or v == 4.25


def test_heatmap_matches_brute_force_oracle():
    rng = random.Random(31)
    for case in range(25):
        n = rng.randint(4, 40)
        pts = [(rng.uniform(-1e6, 1e6), rng.uniform(-1e6, 1e6), rng.uniform(-1e6, 1e6))
               for _ in range(n)]
        rows = [[repr(a), repr(b), repr(c)] for a, b, c in pts]
        t = table(["x", "y", "c"], [N, N, N], rows)
        bins = (rng.randint(2, 7), rng.randint(2, 7))
        aggregate = rng.choice(["mean", "sum", "count"])
        out = compute_heatmap_grid(t, "x", "y", "c", bins, aggregate, "none")
        expect = brute_force_grid(pts, bins[0], bins[1], aggregate)
        assert len(out["values"]) == len(expect)
        for grow, erow in zip(out["values"], expect):
            for g, e in zip(grow, erow):
                if e is None:
                    assert g is None
                else:
                    assert g == pytest.approx(e, abs=1e-9)


def test_heatmap_cell_counts_sum_to_point_count():
    rng = random.Random(4)
    rows = [[f"{rng.uniform(0, 1):.4f}", f"{rng.uniform(0, 1):.4f}",
             f"{rng.uniform(0, 1):.4f}"] for _ in range(60)]
    rows.append(["bad", "1", "1"])
    t = table(["x", "y", "c"], [N, N, N], rows)
    out = compute_heatmap_grid(t, "x", "y", "c", (4, 6), "mean", "linear")
    assert sum(sum(r) for r in out["counts"]) == 60


def test_heatmap_mean_cells_within_color_bounds():
    rng = random.Random(5)
    vals = [rng.uniform(-50, 50) for _ in range(30)]
    rows = [[f"{rng.uniform(0, 1):.3f}", f"{rng.uniform(0, 1):.3f}", repr(v)]
            for v in vals]
    t = table(["x", "y", "c"], [N, N, N], rows)
    out = compute_heatmap_grid(t, "x", "y", "c", (4, 4), "mean", "linear")
    lo, hi = min(vals), max(vals)
    for row in out["values"]:
        for v in row:
            if v is not None:
                assert lo - 1e-9 <= v <= hi + 1e-9


def test_heatmap_degenerate_axis_collapses_without_interpolation():
    t = table(["x", "y", "c"], [N, N, N],
              [["5", "1", "10"], ["5", "2", "20"], ["5", "3", "30"]])
    out = compute_heatmap_grid(t, "x", "y", "c", (4, 2), "mean", "linear")
    assert out["nx"] == 1 and out["ny"] == 2
    # y range [1, 3]: y=1 lands in the low cell, y=2 and y=3 (max edge) in the high
    assert out["values"][0] == [10.0]
    assert out["values"][1] == [25.0]


def test_heatmap_bins_validated():
    with pytest.raises(errors.TypeMismatch):
        compute_heatmap_grid(corner_table(), "x", "y", "c", (1, 5))


def test_heatmap_direction_on_county_style_data():
    """Color must trend with y when the field is y-correlated (walkthrough check)."""
    rng = random.Random(9)
    rows = []
    for _ in range(300):
        edu = rng.uniform(10, 60)
        income = rng.uniform(10_000, 90_000)
        death = 12 - income / 10_000  # higher income, lower rate
        rows.append([f"{edu:.1f}", f"{income:.0f}", f"{death:.2f}"])
    t = table(["edu", "income", "death"], [N, N, N], rows)
    out = compute_heatmap_grid(t, "edu", "income", "death", (6, 6), "mean", "linear")
    col_means = []
    for gy in range(6):
        vals = [v for v in out["values"][gy] if v is not None]
        if vals:
            col_means.append(sum(vals) / len(vals))
    assert col_means == sorted(col_means, reverse=True)


# ----------------------------------------------------------------------
# choropleth
# ----------------------------------------------------------------------

def test_choropleth_normalizes_and_reports_unmatched():
    t = table(["Area", "v"], [L, N],
              [["India", "10"], ["india", "20"], ["Brazil", "30"], ["Atlantis", "40"]])
    out = compute_choropleth(t, "Area", "v", "mean")
    assert out["regions"] == {"IND": 15.0, "BRA": 30.0}
    assert out["unmatched"] == ["Atlantis"]


def test_choropleth_accepts_codes_and_states():
    t = table(["Area", "v"], [L, N],
              [["IND", "1"], ["Georgia", "2"], ["06037", "3"]])
    out = compute_choropleth(t, "Area", "v", "sum")
    assert out["regions"] == {"06037": 3.0, "GEO": 2.0, "IND": 1.0}


def test_choropleth_requires_location_column():
    t = table(["Area", "v"], [T, N], [])
    with pytest.raises(errors.TypeMismatch):
        compute_choropleth(t, "Area", "v")


# ----------------------------------------------------------------------
# spec validation and document determinism
# ----------------------------------------------------------------------

def test_validate_spec_rules():
    t = table(["label", "num", "year", "place"],
              [C, N, ColumnType.TEMPORAL, L], [])
    validate_spec(ChartSpec(kind="bar", x="label", y="num"), t)
    validate_spec(ChartSpec(kind="line", x="year", y="num"), t)
    validate_spec(ChartSpec(kind="choropleth", region="place", color="num"), t)
    with pytest.raises(errors.InvalidSpec):
        validate_spec(ChartSpec(kind="bar", x="label", y="label"), t)
    with pytest.raises(errors.InvalidSpec):
        validate_spec(ChartSpec(kind="line", x="place", y="num"), t)
    with pytest.raises(errors.InvalidSpec):
        validate_spec(ChartSpec(kind="heatmap2d", x="num", y="num", color="ghost"), t)
    with pytest.raises(errors.InvalidSpec):
        validate_spec(ChartSpec(kind="scatter3d", x="num", y="num"), t)


def test_chart_document_is_deterministic():
    t = table(["x", "y"], [N, N], [["1", "2"], ["3", "4"]])
    spec = ChartSpec(kind="scatter2d", x="x", y="y", title="t")
    a = canonical_doc_bytes(compute_chart_data(t, spec, ("item", 1)))
    b = canonical_doc_bytes(compute_chart_data(t, spec, ("item", 1)))
    assert a == b
    doc = json.loads(a)
    assert doc["source"] == {"item": "item", "version": 1}


def test_create_chart_same_spec_same_hash(lake, workspace):
    src = upload_table(lake, workspace.id, "T", ["x", "y"],
                       [["1", "2"], ["3", "4"]])
    spec = ChartSpec(kind="scatter2d", x="x", y="y")
    c1 = lake.create_chart(src.id, None, spec, "c1", "", "root")
    c2 = lake.create_chart(src.id, None, spec, "c2", "", "root")
    assert c1.latest.hash == c2.latest.hash


def test_create_chart_invalid_spec(lake, workspace):
    src = upload_table(lake, workspace.id, "T", ["x"], [["1"]])
    with pytest.raises(errors.InvalidSpec):
        lake.create_chart(src.id, None, ChartSpec(kind="scatter2d", x="x", y="ghost"),
                          "c", "", "root")


def test_create_chart_requires_visualize_grant(lake, workspace):
    from conftest import make_member
    src = upload_table(lake, workspace.id, "T", ["x", "y"], [["1", "2"]])
    make_member(lake, workspace.id, "up", "staff", ["upload"])
    with pytest.raises(errors.Unauthorized):
        lake.create_chart(src.id, None, ChartSpec(kind="scatter2d", x="x", y="y"),
                          "c", "", "up")
