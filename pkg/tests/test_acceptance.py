"""Acceptance suite: one test per shipped criterion, at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one pass line per
criterion. Every expected value is either hand-computed, produced by an
independent oracle in tests/oracles.py, or a bit-exactness assertion.
"""

from __future__ import annotations

import json
import random
import re
import time

import pytest

from conftest import (
    build_county_pipeline,
    county_fixture,
    csv_bytes,
    upload_table,
)
from datalake import errors
from datalake.charts import ChartSpec
from datalake.provenance import import_prov, tree_entity_count
from datalake.search import SearchIndex, tokenize
from datalake.service import Datalake
from datalake.table import ColumnType
from oracles import bm25_scores, brute_force_grid, nested_loop_join
from test_provenance import random_pipeline, tree_shape

ITEM_ID_RE = re.compile(r"it-[0-9a-f]{12}")


def ok(line: str):
    print(f"PASS: {line}")


# ----------------------------------------------------------------------
# 1. walkthrough pipeline reproduction
# ----------------------------------------------------------------------

def test_walkthrough_pipeline_reproduction(lake, workspace):
    started = time.monotonic()
    items = build_county_pipeline(lake, workspace.id, rows=220)
    elapsed = time.monotonic() - started

    fx = county_fixture(rows=220, seed=7)
    join1 = nested_loop_join(fx["income"][0], fx["income"][1],
                             fx["education"][0], fx["education"][1],
                             [("FIPS", "FIPS")])
    headers1 = fx["income"][0] + fx["education"][0]
    join2 = nested_loop_join(headers1, join1, fx["health"][0], fx["health"][1],
                             [("FIPS", "FIPS")])
    merged = lake.catalog.get_table(items["merge2"].id)
    assert len(merged.rows) == len(join2)

    doc = json.loads(lake.export_prov(items["heatmap"].id, None, "root"))
    assert len(doc["entity"]) == 6
    assert len(doc["activity"]) == 3

    tree = lake.lineage(items["heatmap"].id, None, "root")
    assert tree_shape(tree) == (
        "IMR heat map",
        [("County Analysis",
          [("CDC Infant Mortality", []),
           ("Income and Education",
            [("ACS Education", []), ("ACS Income", [])])])],
    )
    assert tree_entity_count(tree) == 6
    assert elapsed < 5.0
    ok(f"walkthrough pipeline: {len(merged.rows)} merged rows match the nested-loop "
       f"oracle; export has 6 entities / 3 activities in the expected tree shape; "
       f"end to end in {elapsed:.2f}s (< 5s)")


# ----------------------------------------------------------------------
# 2. replay determinism over randomized pipelines
# ----------------------------------------------------------------------

def test_replay_determinism_100_random_pipelines(lake, workspace):
    rng = random.Random(20250809)
    hits = 0
    for i in range(100):
        final = random_pipeline(lake, workspace.id, rng, f"p{i}")
        replayed = lake.replay(final.id, None, {}, "root")
        assert replayed.latest.hash == final.latest.hash, f"pipeline {i} diverged"
        hits += 1
    assert hits == 100
    ok("replay determinism: 100/100 randomized pipelines reproduce stored "
       "content hashes bit-exactly under empty substitution")


# ----------------------------------------------------------------------
# 3. join oracle
# ----------------------------------------------------------------------

def test_join_matches_nested_loop_oracle_200_cases():
    from test_relops import random_join_case
    from datalake.relops import join_pair

    rng = random.Random(424242)
    for case in range(200):
        left, right, keys = random_join_case(rng)
        out = join_pair(left, right, keys)
        expect = nested_loop_join(left.headers, left.rows, right.headers,
                                  right.rows, keys)
        assert sorted(map(tuple, out.rows)) == sorted(map(tuple, expect)), f"case {case}"
        assert out.rows == expect, f"case {case} (ordering)"
    ok("join oracle: 200/200 randomized merges equal the brute-force "
       "nested-loop equi-join, row order included")


# ----------------------------------------------------------------------
# 4. heatmap oracle
# ----------------------------------------------------------------------

def test_heatmap_binning_oracle_50_tables():
    from datalake.charts import compute_heatmap_grid
    from datalake.table import TypedTable

    N = ColumnType.NUMERICAL
    rng = random.Random(1234)
    for case in range(50):
        n = rng.randint(4, 60)
        pts = [(rng.uniform(-1e6, 1e6), rng.uniform(-1e6, 1e6), rng.uniform(-1e6, 1e6))
               for _ in range(n)]
        t = TypedTable(["x", "y", "c"], [N, N, N],
                       [[repr(a), repr(b), repr(c)] for a, b, c in pts])
        bins = (rng.randint(2, 9), rng.randint(2, 9))
        aggregate = rng.choice(["mean", "sum", "count"])
        out = compute_heatmap_grid(t, "x", "y", "c", bins, aggregate, "none")
        expect = brute_force_grid(pts, bins[0], bins[1], aggregate)
        for grow, erow in zip(out["values"], expect):
            for g, e in zip(grow, erow):
                if e is None:
                    assert g is None, f"case {case}"
                else:
                    assert g == pytest.approx(e, abs=1e-9), f"case {case}"

    # constant-field interpolation preserves the constant exactly
    rows = [[f"{rng.uniform(0, 10):.3f}", f"{rng.uniform(0, 10):.3f}", "3.5"]
            for _ in range(50)]
    t = TypedTable(["x", "y", "c"], [N, N, N], rows)
    out = compute_heatmap_grid(t, "x", "y", "c", (6, 6), "mean", "linear")
    assert all(v in (None, 3.5) for row in out["values"] for v in row)

    # hand-computed 3x3 corner fixture
    corners = TypedTable(["x", "y", "c"], [N, N, N],
                         [["0", "0", "1"], ["2", "0", "3"], ["0", "2", "5"], ["2", "2", "7"]])
    out = compute_heatmap_grid(corners, "x", "y", "c", (3, 3), "mean", "linear")
    assert out["values"] == [[1.0, 2.0, 3.0], [3.0, 4.0, 5.0], [5.0, 6.0, 7.0]]
    ok("heatmap oracle: 50/50 randomized tables match brute-force binning at 1e-9; "
       "constant field preserved exactly; 3x3 corner fixture exact")


# ----------------------------------------------------------------------
# 5. version propagation
# ----------------------------------------------------------------------

def test_version_propagation_closure_and_staleness(lake, workspace):
    items = build_county_pipeline(lake, workspace.id, rows=210)
    upload_table(lake, workspace.id, "Bystander", ["x"], [["1"]])
    closure = {items[k].id for k in ("merge1", "merge2", "heatmap")}

    def outside_state():
        return json.dumps(
            {iid: it.as_dict() for iid, it in lake.catalog.items.items()
             if iid not in closure and iid != items["income"].id},
            sort_keys=True)

    before_outside = outside_state()
    fx = lake.catalog.get_table(items["income"].id)
    record, report = lake.create_version(
        items["income"].id,
        csv_bytes(fx.headers, fx.rows + [["99901", "County 99901", "41000"],
                                         ["99902", "County 99902", "62000"]]),
        {}, "root")
    assert record.number == 2
    assert {r["item"] for r in report} == closure
    assert all(r["status"] == "regenerated" and r["version"] == 2 for r in report)
    assert outside_state() == before_outside
    for iid in closure:
        assert len(lake.catalog.items[iid].versions) == 2

    fx_health = lake.catalog.get_table(items["health"].id)
    _, report2 = lake.create_version(
        items["health"].id,
        csv_bytes(["FIPS"], [[r[0]] for r in fx_health.rows]), {}, "root")
    by_item = {r["item"]: r for r in report2}
    heat = by_item[items["heatmap"].id]
    assert heat["status"] == "stale" and heat["reason"]
    latest = lake.catalog.items[items["heatmap"].id].latest
    assert latest.stale and latest.stale_reason
    ok("version propagation: append regenerated exactly the forward closure "
       "(2 merges + heat map) once each; outside-closure store unchanged; "
       f"column removal marked the chart stale ({heat['reason']!r})")


# ----------------------------------------------------------------------
# 6. ACL non-leakage
# ----------------------------------------------------------------------

def leaked_item_ids(payload) -> set[str]:
    return set(ITEM_ID_RE.findall(json.dumps(payload)))


def test_acl_non_leakage_500_randomized_configs(tmp_path):
    lake = Datalake(tmp_path / "acl", fsync=False)
    lake.create_user("root", service_admin=True, actor=None)
    users = [f"user{i}" for i in range(4)]
    for u in users:
        lake.create_user(u, service_admin=False, actor="root")
    rng = random.Random(555)
    grants_pool = ["upload", "transform", "visualize", "version", "share"]

    checked = 0
    for cfg in range(500):
        ws = lake.create_workspace(f"ws-{cfg}", None, "root")
        members = set()
        for u in users:
            if rng.random() < 0.5:
                role = rng.choice(["admin", "staff", "guest"])
                grants = [] if role != "staff" else rng.sample(
                    grants_pool, rng.randint(0, len(grants_pool)))
                lake.add_member(ws.id, u, role, grants, "root")
                members.add(u)
        token = f"tkn{cfg}"
        table = upload_table(lake, ws.id, f"table {token}", ["k", "v"],
                             [["a", "1"], ["b", "2"]])
        chart = lake.create_chart(table.id, None,
                                  ChartSpec(kind="bar", x="k", y="v"),
                                  f"chart {token}", "", "root")
        for item in (table, chart):
            lake.set_visibility(item.id, rng.choice(["public", "private"]), "root")

        for principal in users + [None, "root"]:
            readable = {iid for iid in (table.id, chart.id)
                        if lake.catalog.can_read_item(principal, iid)}

            for hit in lake.search(token, principal, limit=10):
                assert leaked_item_ids(hit) <= readable, f"search leak cfg {cfg}"

            for item in (table, chart):
                try:
                    tree = lake.lineage(item.id, None, principal)
                except (errors.Unauthorized, errors.UnknownItem):
                    assert item.id not in readable
                    continue
                assert leaked_item_ids(tree) <= readable, f"lineage leak cfg {cfg}"
                exported = lake.export_prov(item.id, None, principal).decode()
                assert set(ITEM_ID_RE.findall(exported)) <= readable, \
                    f"prov export leak cfg {cfg}"

            try:
                doc = lake.chart_data(chart.id, principal)
                assert leaked_item_ids(doc) <= readable, f"chart-data leak cfg {cfg}"
            except errors.Unauthorized:
                assert chart.id not in readable

            for item in (table, chart):
                try:
                    resolved = lake.resolve_permalink(item.permalink_token, principal)
                    assert item.id in readable
                    assert leaked_item_ids(resolved.as_dict()) <= readable
                except errors.Unauthorized:
                    assert item.id not in readable
        checked += 1
    lake.close()
    assert checked == 500
    ok("ACL non-leakage: 500/500 randomized member/grant/visibility configurations; "
       "no search hit, lineage node, provenance export, chart document, or "
       "permalink exposed a private item to a non-member")


# ----------------------------------------------------------------------
# 7. column inference
# ----------------------------------------------------------------------

def test_column_inference_fixture(lake, workspace):
    from datalake.ingest import infer_column_types, parse_csv

    headers = ["homepage", "TIME PERIOD", "rate", "AREA LABEL", "category", "remark"]
    rows = [
        ["http://data.example.org/1", "2010", "12.5", "India", "urban", "collected on site"],
        ["https://data.example.org/2", "2011", "13.1", "Brazil", "rural", "phone interview"],
        ["www.example.net/3", "2012", "N/A", "Kenya", "urban", "mailed questionnaire"],
        ["http://data.example.org/4", "2013", "14.0", "Indonesia", "rural", "registry extract"],
    ]
    proposal = infer_column_types(parse_csv(csv_bytes(headers, rows)))
    inferred = {c.name: c.inferred_type for c in proposal.columns}
    expected = {
        "homepage": ColumnType.URL,
        "TIME PERIOD": ColumnType.TEMPORAL,
        "rate": ColumnType.NUMERICAL,
        "AREA LABEL": ColumnType.LOCATION,
        "category": ColumnType.CATEGORICAL,
        "remark": ColumnType.TEXT,
    }
    assert inferred == expected
    rate = next(c for c in proposal.columns if c.name == "rate")
    assert rate.confidence == pytest.approx(0.75)
    ok("column inference: 6/6 fixture columns typed correctly; AREA LABEL -> "
       "Location, TIME PERIOD -> Temporal; missing-marker column at confidence 0.75")


# ----------------------------------------------------------------------
# 8. search
# ----------------------------------------------------------------------

def test_search_bm25_and_exact_name_ranking(tmp_path):
    index = SearchIndex(tmp_path / "hand")
    docs = {
        "d1": "infant mortality rate by county",
        "d2": "median household income by county",
        "d3": "infant vaccination schedule",
    }
    for doc_id, text in docs.items():
        index.index_document(doc_id, [text])
    q = tokenize("infant mortality")
    frozen = {"d1": 1.3649283037027442, "d2": 0.0, "d3": 0.5376841518571216}
    oracle = bm25_scores({d: tokenize(t) for d, t in docs.items()}, q)
    for doc_id in docs:
        assert index.score(doc_id, q) == pytest.approx(frozen[doc_id], abs=1e-9)
        assert index.score(doc_id, q) == pytest.approx(oracle[doc_id], abs=1e-9)

    lake = Datalake(tmp_path / "corpus", fsync=False)
    lake.create_user("root", service_admin=True, actor=None)
    ws = lake.create_workspace("Corpus", None, "root")
    rng = random.Random(8)
    adjectives = ["coastal", "urban", "rural", "annual", "regional", "district",
                  "provincial", "municipal", "national", "seasonal"]
    nouns = ["literacy", "turnout", "rainfall", "enrollment", "vaccination",
             "employment", "sanitation", "housing", "nutrition", "commute"]
    names = [f"{a} {b} survey" for a in adjectives for b in nouns][:100]
    rng.shuffle(names)
    items = {}
    for name in names:
        items[name] = upload_table(
            lake, ws.id, name, ["region", "value"],
            [[rng.choice(["north", "south", "east"]), str(rng.randint(0, 99))]
             for _ in range(3)],
            description="tabular measurements by region")
    for name, item in items.items():
        hits = lake.search(name, "root", limit=5)
        assert hits and hits[0]["item"] == item.id, name
    lake.close()
    ok("search: hand-computed 3-document BM25 scores match to 1e-9; exact-name "
       "queries rank their item first for all 100 fixture items")


# ----------------------------------------------------------------------
# 9. PROV export round trip
# ----------------------------------------------------------------------

def test_prov_round_trip_for_every_fixture_item(lake, workspace):
    items = build_county_pipeline(lake, workspace.id, rows=210)
    count = 0
    for item_id in lake.catalog.items:
        first = lake.export_prov(item_id, None, "root")
        second = import_prov(first).to_bytes()
        assert first == second, item_id
        count += 1
    assert count == len(items)
    ok(f"PROV round trip: export -> import -> export byte-identical for all "
       f"{count} items in the walkthrough store")


# ----------------------------------------------------------------------
# 10. crash safety
# ----------------------------------------------------------------------

def test_crash_safety_truncation_and_double_replay(tmp_path):
    root = tmp_path / "crash"
    lake = Datalake(root)  # fsync on: every acknowledged write is durable
    lake.create_user("root", service_admin=True, actor=None)
    ws = lake.create_workspace("W", None, "root")
    upload_table(lake, ws.id, "T1", ["a"], [["1"]])
    acknowledged_hash = lake.catalog.state_hash()
    upload_table(lake, ws.id, "T2", ["a"], [["2"]])
    lake.close()

    journal = root / "catalog.jsonl"
    raw = journal.read_bytes()
    journal.write_bytes(raw[:-11])  # tear the final record mid-write

    recovered = Datalake(root)
    assert recovered.catalog.recovered_with_truncation
    assert recovered.catalog.state_hash() == acknowledged_hash
    assert [i.name for i in recovered.catalog.items.values()] == ["T1"]
    recovered.close()

    again = Datalake(root)
    assert again.catalog.state_hash() == acknowledged_hash
    again.close()
    ok("crash safety: mid-record truncation recovered to the last acknowledged "
       "write; double journal replay produced identical state hashes")
