#!/usr/bin/env python3
"""Record wire-level API fixtures for the frontend contract tests.

Boots a throwaway store, drives the county walkthrough over HTTP, and saves
request/response documents under tests/fixtures/. Re-run after any API
change: ids in the fixtures are fresh each run, the tests read them from the
fixtures themselves.
"""

from __future__ import annotations

import io
import json
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from datalake.server import create_app
from datalake.service import Datalake

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

INCOME = b"""FIPS,County,Median_Household_Income
01001,Autauga,58786
01003,Baldwin,55962
01005,Barbour,34186
01007,Bibb,45340
"""
EDUCATION = b"""FIPS,Percent_Bachelors_Or_Higher
01001,27.7
01003,31.9
01005,12.2
01007,10.9
"""
HEALTH = b"""FIPS,Death_Rate
01001,7.3
01003,6.4
01005,9.8
01007,8.1
"""


def save(name: str, payload):
    FIXTURES.mkdir(parents=True, exist_ok=True)
    (FIXTURES / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"recorded {name}")


def upload(client, headers, ws_id, name, data, corrections):
    staged = client.post(
        "/items", files={"file": (f"{name}.csv", io.BytesIO(data), "text/csv")},
        data={"workspace": ws_id, "name": name}, headers=headers).json()
    approve_request = {"corrections": corrections}
    item = client.post(f"/items/{staged['id']}/schema:approve",
                       json=approve_request, headers=headers).json()
    return staged, approve_request, item


def main():
    tmp = tempfile.mkdtemp(prefix="fixture-store-")
    lake = Datalake(tmp, fsync=False)
    admin = lake.create_user("recorder", service_admin=True, actor=None)
    client = TestClient(create_app(lake))
    headers = {"Authorization": f"Bearer {admin.token}"}

    ws = client.post("/workspaces", json={"name": "US Counties"}, headers=headers).json()
    save("workspace.json", ws)

    staged, approve_req, income = upload(client, headers, ws["id"], "ACS Income",
                                         INCOME, {"FIPS": "Categorical"})
    save("upload_staged.json", staged)
    save("approve_request.json", approve_req)
    save("approve_response.json", income)

    _, _, education = upload(client, headers, ws["id"], "ACS Education",
                             EDUCATION, {"FIPS": "Categorical"})
    _, _, health = upload(client, headers, ws["id"], "CDC Infant Mortality",
                          HEALTH, {"FIPS": "Categorical"})
    save("item_income.json", client.get(f"/items/{income['id']}", headers=headers).json())
    save("item_education.json", client.get(f"/items/{education['id']}", headers=headers).json())
    save("item_health.json", client.get(f"/items/{health['id']}", headers=headers).json())

    infer = client.post("/ops/merge:infer-keys",
                        json={"left": income["id"], "right": education["id"]},
                        headers=headers).json()
    save("infer_keys.json", infer)

    merge1_request = {
        "inputs": [income["id"], education["id"]],
        "keys": [[{"left": "FIPS", "right": "FIPS"}]],
        "output_columns": None,
        "name": "Income and Education",
    }
    merge1 = client.post("/ops/merge", json=merge1_request, headers=headers).json()
    save("merge1_request.json", merge1_request)

    merge2_request = {
        "inputs": [merge1["id"], health["id"]],
        "keys": [[{"left": "FIPS_x", "right": "FIPS"}]],
        "output_columns": None,
        "name": "County Analysis",
    }
    merge2 = client.post("/ops/merge", json=merge2_request, headers=headers).json()
    save("merge2_request.json", merge2_request)
    save("merge2_response.json", merge2)
    save("item_merged.json", client.get(f"/items/{merge2['id']}", headers=headers).json())

    chart_request = {
        "spec": {
            "kind": "heatmap2d",
            "title": "Infant mortality heat map",
            "x": "Percent_Bachelors_Or_Higher",
            "y": "Median_Household_Income",
            "z": None,
            "color": "Death_Rate",
            "region": None,
            "aggregate": "mean",
            "bins": [50, 50],
            "interpolation": "linear",
        },
        "name": "IMR heat map",
        "description": "Heat map of infant mortality against income and education",
    }
    chart = client.post(f"/items/{merge2['id']}/charts", json=chart_request,
                        headers=headers).json()
    save("chart_request.json", chart_request)
    save("chart_response.json", chart)
    save("chart_data.json", client.get(f"/charts/{chart['id']}/data", headers=headers).json())

    save("lineage_heatmap.json",
         client.get(f"/items/{chart['id']}/lineage", headers=headers).json())
    save("search.json", client.get("/search", params={"q": "income"}, headers=headers).json())
    save("sources.json", client.get("/datalib/sources").json())
    save("datalib_search.json",
         client.get("/datalib/mock/search", params={"q": "family planning"}).json())
    save("workspace_items.json",
         client.get(f"/workspaces/{ws['id']}/items", headers=headers).json())

    error = client.post("/items", files={"file": ("x.csv", io.BytesIO(INCOME), "text/csv")},
                        data={"workspace": ws["id"], "name": "ACS Income"}, headers=headers)
    staged_dup = error.json()
    dup = client.post(f"/items/{staged_dup['id']}/schema:approve", json={"corrections": {}},
                      headers=headers)
    save("error_duplicate_name.json", {"status": dup.status_code, "body": dup.json()})

    lake.close()
    print(f"fixtures written to {FIXTURES}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
