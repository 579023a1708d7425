from __future__ import annotations

import json
import random

import pytest

from conftest import build_county_pipeline, make_member, upload_table
from datalake import errors
from datalake.charts import ChartSpec
from datalake.provenance import import_prov, tree_entity_count
from datalake.relops import Atom, MergePlan, Predicate


def tree_shape(node):
    """Names only, nested, for comparing against expected tree shapes."""
    label = node["attributes"]["name"] if "item" in node else node.get("kind", "redacted")
    return (label, sorted(tree_shape(c) for c in node.get("children", [])))


# ----------------------------------------------------------------------
# lineage trees
# ----------------------------------------------------------------------

def test_fresh_ingest_tree_depth_one(lake, workspace):
    item = upload_table(lake, workspace.id, "T", ["a"], [["1"]])
    tree = lake.lineage(item.id, None, "root")
    assert tree["attributes"]["operation"] == "ingest"
    assert len(tree["children"]) == 1
    assert tree["children"][0]["kind"] == "external-source"
    assert tree_entity_count(tree) == 2


def test_heatmap_tree_matches_walkthrough_shape(lake, workspace):
    items = build_county_pipeline(lake, workspace.id, rows=40)
    tree = lake.lineage(items["heatmap"].id, None, "root")
    assert tree_shape(tree) == (
        "IMR heat map",
        [("County Analysis",
          [("CDC Infant Mortality", []),
           ("Income and Education",
            [("ACS Education", []), ("ACS Income", [])])])],
    )
    assert tree_entity_count(tree) == 6


def test_family_planning_column_chart_tree_is_six_entities(lake, workspace):
    """Three imported tables, a 3-way merge, a year filter, then a bar chart."""
    for ds in ("family-planning", "internet-access", "employment-women"):
        lake.import_external("mock", ds, workspace.id, "root")
    by_name = {i.name: i for i in lake.catalog.items.values()}
    t1 = by_name["Contraceptive prevalence, modern methods (% of married women)"]
    t2 = by_name["Households with internet access at home (%)"]
    t3 = by_name["Share of women employed in the non-agriculture sector (%)"]
    merged = lake.merge(
        MergePlan([t1.id, t2.id, t3.id],
                  [[("AREA LABEL", "Area"), ("TIME PERIOD", "TIME PERIOD")],
                   [("AREA LABEL", "Region"), ("TIME PERIOD_x", "TIME PERIOD")]]),
        "Table 4", "", "root")
    year = lake.filter_rows(merged.id, Predicate((Atom("TIME PERIOD_x", "=", "2012"),)),
                            "root", name="Table 5")
    chart = lake.create_chart(
        year.id, None,
        ChartSpec(kind="bar", x="AREA LABEL", y="Value", aggregate="mean",
                  title="2012 values"),
        "Column chart", "", "root")
    tree = lake.lineage(chart.id, None, "root")
    assert tree_entity_count(tree) == 6
    assert tree["attributes"]["name"] == "Column chart"
    assert tree["children"][0]["attributes"]["name"] == "Table 5"


def test_lineage_redacts_unreadable_ancestors(lake, workspace):
    src = upload_table(lake, workspace.id, "Secret Source", ["k", "v"],
                       [["a", "1"], ["b", "2"]])
    derived = lake.filter_rows(src.id, Predicate(), "root", name="Open Result")
    lake.set_visibility(derived.id, "public", "root")

    tree = lake.lineage(derived.id, None, None)  # anonymous viewer
    assert tree["attributes"]["name"] == "Open Result"
    stub = tree["children"][0]
    assert stub.get("redacted") is True
    assert "item" not in stub and "attributes" not in stub
    assert src.id not in json.dumps(tree)


def test_lineage_requires_read_on_root(lake, workspace):
    item = upload_table(lake, workspace.id, "T", ["a"], [["1"]])
    with pytest.raises(errors.Unauthorized):
        lake.lineage(item.id, None, None)
    with pytest.raises(errors.UnknownItem):
        lake.lineage("it-none", None, "root")


def test_duplicate_generation_guard(lake, workspace):
    item = upload_table(lake, workspace.id, "T", ["a"], [["1"]])
    with pytest.raises(errors.DuplicateGeneration):
        lake.catalog.record_operation({"op": "ingest"}, [], (item.id, 1), "root")


def test_derivation_graph_is_append_only_dag(lake, workspace):
    items = build_county_pipeline(lake, workspace.id, rows=30)
    cat = lake.catalog
    activities_before = set(cat.activities)
    lake.filter_rows(items["merge2"].id, Predicate(), "root", name="extra")
    assert activities_before <= set(cat.activities)
    # every used edge points at an older, existing version: no cycles possible
    for act in cat.activities.values():
        for used_item, used_ver in act.used:
            assert (used_item, used_ver) != act.output
            assert used_ver <= cat.items[used_item].latest.number


# ----------------------------------------------------------------------
# export / import round trip
# ----------------------------------------------------------------------

def test_heatmap_export_counts(lake, workspace):
    items = build_county_pipeline(lake, workspace.id, rows=30)
    doc = json.loads(lake.export_prov(items["heatmap"].id, None, "root"))
    assert len(doc["entity"]) == 6
    assert len(doc["activity"]) == 3
    kinds = sorted(a["dl:operation"] for a in doc["activity"].values())
    assert kinds == ["chart", "merge", "merge"]
    assert len(doc["agent"]) >= 1


def test_ingested_only_export_counts(lake, workspace):
    item = upload_table(lake, workspace.id, "T", ["a"], [["1"]])
    doc = json.loads(lake.export_prov(item.id, None, "root"))
    assert len(doc["entity"]) == 2
    assert len(doc["activity"]) == 1
    assert list(doc["activity"].values())[0]["dl:operation"] == "ingest"


def test_export_import_export_is_byte_identical(lake, workspace):
    items = build_county_pipeline(lake, workspace.id, rows=30)
    for item in items.values():
        first = lake.export_prov(item.id, None, "root")
        back = import_prov(first)
        second = back.to_bytes()
        assert first == second, item.id


def test_export_redacts_params_touching_private_inputs(lake, workspace):
    left = upload_table(lake, workspace.id, "Private left", ["k", "v"], [["a", "1"]])
    right = upload_table(lake, workspace.id, "Private right", ["k", "w"], [["a", "2"]])
    merged = lake.merge(MergePlan([left.id, right.id], [[("k", "k")]]),
                        "Open merge", "", "root")
    lake.set_visibility(merged.id, "public", "root")

    doc = json.loads(lake.export_prov(merged.id, None, None))  # anonymous
    dumped = json.dumps(doc)
    assert left.id not in dumped and right.id not in dumped
    act = next(iter(doc["activity"].values()))
    assert act["dl:parameters"] == {"dl:redacted": True}

    # members still get the full replayable parameter record
    full = json.loads(lake.export_prov(merged.id, None, "root"))
    act = next(iter(full["activity"].values()))
    assert act["dl:parameters"]["inputs"] == [left.id, right.id]


def test_export_relations_are_consistent(lake, workspace):
    items = build_county_pipeline(lake, workspace.id, rows=30)
    doc = json.loads(lake.export_prov(items["heatmap"].id, None, "root"))
    for rel in doc["used"]:
        assert rel["activity"] in doc["activity"]
        assert rel["entity"] in doc["entity"]
    for rel in doc["wasGeneratedBy"]:
        assert rel["entity"] in doc["entity"]
        assert rel["activity"] in doc["activity"]
    for rel in doc["wasDerivedFrom"]:
        assert rel["generatedEntity"] in doc["entity"]
        assert rel["usedEntity"] in doc["entity"]


# ----------------------------------------------------------------------
# replay
# ----------------------------------------------------------------------

def test_replay_empty_substitution_is_bit_identical(lake, workspace):
    items = build_county_pipeline(lake, workspace.id, rows=30)
    replayed = lake.replay(items["heatmap"].id, None, {}, "root")
    assert replayed.id != items["heatmap"].id
    assert replayed.latest.hash == items["heatmap"].latest.hash
    # unchanged intermediates were reused, not duplicated
    names = [i.name for i in lake.catalog.items.values()]
    assert names.count("County Analysis (replay)") == 0


def test_replay_with_substitution_recomputes(lake, workspace):
    src = upload_table(lake, workspace.id, "Employment", ["Region", "TIME PERIOD", "Value"],
                       [["India", "2011", "10"], ["India", "2012", "20"], ["Brazil", "2012", "30"]],
                       corrections={"TIME PERIOD": "Temporal"})
    filtered = lake.filter_rows(src.id, Predicate((Atom("TIME PERIOD", "=", "2012"),)),
                                "root", name="Table 5")
    revised = upload_table(lake, workspace.id, "Employment revised",
                           ["Region", "TIME PERIOD", "Value"],
                           [["India", "2012", "99"], ["Kenya", "2011", "5"]],
                           corrections={"TIME PERIOD": "Temporal"})
    out = lake.replay(filtered.id, None, {src.id: revised.id}, "root")
    table = lake.catalog.get_table(out.id)
    assert table.rows == [["India", "2012", "99"]]
    act = lake.catalog.activities[lake.catalog.activity_by_output[(out.id, 1)]]
    assert act.used == [(revised.id, 1)]


def test_replay_substitution_missing_column_rejected(lake, workspace):
    src = upload_table(lake, workspace.id, "Employment", ["Region", "TIME PERIOD", "Value"],
                       [["India", "2012", "1"]], corrections={"TIME PERIOD": "Temporal"})
    filtered = lake.filter_rows(src.id, Predicate((Atom("TIME PERIOD", "=", "2012"),)),
                                "root", name="F")
    bad = upload_table(lake, workspace.id, "No time column", ["Region", "Value"],
                       [["India", "1"]])
    with pytest.raises(errors.SchemaIncompatibleSubstitution):
        lake.replay(filtered.id, None, {src.id: bad.id}, "root")


def test_replay_substituted_chain_materializes_changed_intermediates(lake, workspace):
    items = build_county_pipeline(lake, workspace.id, rows=30, seed=3)
    fx_income = lake.catalog.get_table(items["income"].id)
    revised_rows = [r for r in fx_income.rows[:-3]]
    revised = upload_table(lake, workspace.id, "ACS Income revised",
                           ["FIPS", "County", "Median_Household_Income"], revised_rows,
                           corrections={"FIPS": "Categorical"})
    out = lake.replay(items["heatmap"].id, None, {items["income"].id: revised.id}, "root")
    assert out.kind == "chart"
    doc = json.loads(lake.catalog.get_content(out.id))
    src_item = doc["source"]["item"]
    assert src_item not in (items["merge2"].id,)  # points at the recomputed table
    assert lake.catalog.items[src_item].name.startswith("County Analysis (replay)")


def test_replay_requires_reading_every_ancestor(lake, workspace):
    src = upload_table(lake, workspace.id, "Hidden", ["k"], [["a"]])
    derived = lake.filter_rows(src.id, Predicate(), "root", name="Out")
    lake.set_visibility(derived.id, "public", "root")
    other = lake.create_workspace("Mine", None, "root")
    make_member(lake, other.id, "bob", "staff", ["transform"])
    with pytest.raises(errors.Unauthorized) as exc:
        lake.replay(derived.id, None, {}, "bob", workspace=other.id)
    assert src.id not in str(exc.value)


def test_replay_of_old_version_after_source_moved_on(lake, workspace):
    """Unsubstituted replay pins ancestors at their recorded versions."""
    from conftest import csv_bytes

    table = upload_table(lake, workspace.id, "T", ["x", "y"], [["1", "2"], ["3", "4"]])
    chart = lake.create_chart(table.id, None,
                              ChartSpec(kind="scatter2d", x="x", y="y"), "c", "", "root")
    v1_hash = chart.version(1).hash
    lake.create_version(table.id, csv_bytes(["x", "y"], [["9", "9"]]), {}, "root")
    assert lake.catalog.items[chart.id].latest.number == 2  # propagation ran

    replay_v1 = lake.replay(chart.id, 1, {}, "root")
    assert replay_v1.latest.hash == v1_hash
    replay_latest = lake.replay(chart.id, None, {}, "root")
    assert replay_latest.latest.hash == lake.catalog.items[chart.id].version(2).hash


def test_replay_unknown_substitution_target(lake, workspace):
    item = upload_table(lake, workspace.id, "T", ["a"], [["1"]])
    with pytest.raises(errors.UnknownItem):
        lake.replay(item.id, None, {"it-none": item.id}, "root")


def test_replay_mid_chain_substitution(lake, workspace):
    """Substitution applies to intermediates, not only leaf sources."""
    src = upload_table(lake, workspace.id, "Src", ["k", "v"],
                       [["a", "1"], ["b", "2"], ["c", "3"]])
    mid = lake.filter_rows(src.id, Predicate((Atom("k", "!=", "c"),)), "root", name="Mid")
    final = lake.select_columns(mid.id, ["v"], "root", name="Final")
    other_mid = upload_table(lake, workspace.id, "Other mid", ["k", "v"],
                             [["z", "9"]])
    out = lake.replay(final.id, None, {mid.id: other_mid.id}, "root")
    assert lake.catalog.get_table(out.id).rows == [["9"]]


def test_replay_substitution_kind_mismatch(lake, workspace):
    src = upload_table(lake, workspace.id, "Src", ["x", "y"], [["1", "2"]])
    derived = lake.filter_rows(src.id, Predicate(), "root", name="Derived")
    chart = lake.create_chart(src.id, None, ChartSpec(kind="scatter2d", x="x", y="y"),
                              "chart", "", "root")
    with pytest.raises(errors.SchemaIncompatibleSubstitution):
        lake.replay(derived.id, None, {src.id: chart.id}, "root")


# ----------------------------------------------------------------------
# randomized replay determinism
# ----------------------------------------------------------------------

def random_pipeline(lake, workspace_id, rng: random.Random, tag: str):
    """Build a random transform pipeline and return its final item."""
    from datalake.table import ColumnType

    n_rows = rng.randint(2, 30)
    keys = [str(rng.randint(0, 6)) for _ in range(n_rows)]
    base_rows = [[k, f"{rng.uniform(0, 100):.2f}", f"{rng.uniform(0, 9):.1f}",
                  rng.choice(["red", "blue", "green"])] for k in keys]
    headers = ["key", "val_a", "val_b", "label"]
    corrections = {"key": "Categorical", "label": "Categorical"}
    a = upload_table(lake, workspace_id, f"base-{tag}-a", headers, base_rows,
                     corrections=corrections)
    b = upload_table(lake, workspace_id, f"base-{tag}-b", headers,
                     [[str(rng.randint(0, 6)), f"{rng.uniform(0, 100):.2f}",
                       f"{rng.uniform(0, 9):.1f}", rng.choice(["red", "blue"])]
                      for _ in range(rng.randint(2, 30))], corrections=corrections)
    pool = [a, b]
    current = a
    for depth in range(rng.randint(1, 4)):
        op = rng.choice(["rename", "filter", "select", "merge"])
        table = lake.catalog.get_table(current.id)
        if op == "rename":
            col = rng.choice(table.headers)
            current = lake.rename_columns(current.id, {col: f"{col}_r{depth}"}, "root")
        elif op == "filter":
            numeric = [h for h, t in zip(table.headers, table.types)
                       if t == ColumnType.NUMERICAL]
            col = rng.choice(numeric) if numeric else None
            pred = Predicate((Atom(col, "<", "50"),)) if col else Predicate()
            current = lake.filter_rows(current.id, pred, "root")
        elif op == "select":
            cols = rng.sample(table.headers, rng.randint(1, len(table.headers)))
            current = lake.select_columns(current.id, cols, "root")
        else:
            other = rng.choice(pool)
            left_t = lake.catalog.get_table(current.id)
            right_t = lake.catalog.get_table(other.id)
            pair = None
            for lc, lt in zip(left_t.headers, left_t.types):
                for rc, rt in zip(right_t.headers, right_t.types):
                    if lt == rt:
                        pair = (lc, rc)
                        break
                if pair:
                    break
            if pair is None:
                continue
            current = lake.merge(MergePlan([current.id, other.id], [[pair]]),
                                 f"merge-{tag}-{depth}", "", "root")
        pool.append(current)
    table = lake.catalog.get_table(current.id)
    from datalake.table import ColumnType as CT
    numeric = [h for h, t in zip(table.headers, table.types) if t == CT.NUMERICAL]
    if len(numeric) >= 2 and rng.random() < 0.5 and table.rows:
        spec = ChartSpec(kind="scatter2d", x=numeric[0], y=numeric[1])
        return lake.create_chart(current.id, None, spec, f"chart-{tag}", "", "root")
    return current


def test_randomized_replay_determinism_quick(lake, workspace):
    rng = random.Random(99)
    for i in range(10):
        final = random_pipeline(lake, workspace.id, rng, f"q{i}")
        replayed = lake.replay(final.id, None, {}, "root")
        assert replayed.latest.hash == final.latest.hash, f"pipeline {i}"
